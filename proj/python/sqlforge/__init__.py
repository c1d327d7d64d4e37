"""Python access to the sqlforge text-to-SQL toolkit."""

from sqlforge._core import (
    Error,
    execute,
    execution_match,
    extract_references,
    introspect_database,
    render_prompt,
    run_cli,
    validate,
)

__all__ = [
    "Error",
    "execute",
    "execution_match",
    "extract_references",
    "introspect_database",
    "render_prompt",
    "run_cli",
    "validate",
]
