"""Batch front end over task documents."""
from .taskfile import (
    TaskDocument, TaskValidationError, dumps_report, exit_status, list_examples, load, load_example,
    loads, run_document, run_task_file,
)

__all__ = [
    "TaskDocument", "TaskValidationError", "dumps_report", "exit_status", "list_examples", "load",
    "load_example", "loads", "run_document", "run_task_file",
]
