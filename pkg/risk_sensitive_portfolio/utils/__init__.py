from .logger import get_logger, log_as_yaml, log_execution
from .templates import ReportTemplates

__all__ = ["get_logger", "log_as_yaml", "log_execution", "ReportTemplates"]
