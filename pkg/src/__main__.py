"""
Entry point for running the command line as a module

Usage:
    python -m src <command> [options]
"""

from .cli import run

if __name__ == "__main__":
    run()
