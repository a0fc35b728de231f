from datetime import datetime
from typing import Dict, Any


class MomdwaError(Exception):
    """Base class for categorized errors surfaced by the CLI"""

    code = "INTERNAL_ERROR"
    exit_code = 1

    def __init__(self, message: str, code: str = None):
        super().__init__(message)
        self.message = message
        if code:
            self.code = code


class ConfigurationError(MomdwaError):
    code = "CONFIG_ERROR"
    exit_code = 2


class EvaluationError(MomdwaError):
    code = "EVALUATION_ERROR"
    exit_code = 3


class PropagationError(EvaluationError):
    """Raised when a propagated state stops being finite"""

    code = "PROPAGATION_ERROR"


class DecisionError(MomdwaError):
    code = "DECISION_ERROR"
    exit_code = 4


class ReportError(MomdwaError):
    code = "REPORT_ERROR"
    exit_code = 5


def create_error_response(error_message: str, error_code: str = "INTERNAL_ERROR") -> Dict[str, Any]:
    """Create standardized error response"""
    return {
        "success": False,
        "error": {
            "code": error_code,
            "message": error_message,
            "timestamp": datetime.now().isoformat()
        }
    }
