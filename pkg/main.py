"""
Main entry point for the deficiency toolkit.
Dispatches to the command-line interface in cli.py.
"""
import sys

from cli import main

if __name__ == "__main__":
    sys.exit(main())
