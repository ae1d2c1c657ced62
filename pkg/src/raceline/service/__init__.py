from .app import create_app, format_report

__all__ = ["create_app", "format_report"]
