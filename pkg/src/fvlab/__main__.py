"""
Entry point for the fvlab command-line interface.

When run as a script or module, this file delegates to the CLI logic
defined in `fvlab.cli.main`.
"""

from fvlab.cli import main as cli_mode


def main() -> None:
    """Run the CLI mode of fvlab."""
    cli_mode()


if __name__ == "__main__":
    main()
