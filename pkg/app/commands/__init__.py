"""
app/commands/__init__.py - Command package initialization
"""

from app.commands.handlers import HANDLERS, CommandResult

__all__ = ["HANDLERS", "CommandResult"]
