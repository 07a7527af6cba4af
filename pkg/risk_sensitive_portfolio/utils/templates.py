from pathlib import Path
from typing import Dict

import jinja2

DEFAULT_TEMPLATES_PATH = Path(__file__).parent / "report_templates"


class ReportTemplates:
    """
    Loads and caches the Jinja2 templates of one report family.

    Example usage:
        verify_templates = ReportTemplates("verify")
        text = verify_templates.summary.render(reports=reports)
        # renders report_templates/verify/summary.jinja
    """

    def __init__(self, subfolder: str):
        """
        Args:
            subfolder: Name of the report family folder inside report_templates

        Raises:
            ValueError: If the folder doesn't exist
        """
        self.subfolder = subfolder
        self.template_path = DEFAULT_TEMPLATES_PATH / subfolder

        if not self.template_path.exists():
            raise ValueError(
                f"Report family '{subfolder}' does not exist in report_templates"
            )

        self.template_env = jinja2.Environment(
            loader=jinja2.FileSystemLoader(DEFAULT_TEMPLATES_PATH),
            trim_blocks=True,
            lstrip_blocks=True,
            undefined=jinja2.StrictUndefined,
            keep_trailing_newline=True,
        )
        self._templates: Dict[str, jinja2.Template] = {}

    def __getattr__(self, template_name: str) -> jinja2.Template:
        """
        Load templates on first attribute access.

        Raises:
            AttributeError: If the template file doesn't exist
        """
        if template_name.startswith("_"):
            raise AttributeError(template_name)
        if template_name not in self._templates:
            try:
                template_file = f"{self.subfolder}/{template_name}.jinja"
                self._templates[template_name] = self.template_env.get_template(
                    template_file
                )
            except jinja2.TemplateNotFound:
                raise AttributeError(
                    f"No template file '{template_name}.jinja' found in '{self.subfolder}'"
                )

        return self._templates[template_name]
