"""
Module for logging tools.

Includes tools to:
- Format the logger output in a user-friendly way, e.g. `[WARNING] Message`.
- Report the outcome of invariant checks as `[PASS]` or `[FAIL]` lines.
- Time longer computations (type-table sweeps, quadratures) at debug level.

All records go to standard error, standard output carries the reports.
"""

import logging
import sys
import time
import traceback
from collections.abc import Iterator
from contextlib import contextmanager

# ANSI color codes
RESET = "\033[0m"  # default
COLORS = {
    logging.DEBUG: "\033[90m",  # light grey
    logging.INFO: "\033[0m",  # default
    logging.WARNING: "\033[33m",  # yellow
    logging.ERROR: "\033[31m",  # red
    logging.CRITICAL: "\033[41m",  # red background
    "PASS": "\033[92m",  # green
    "FAIL": "\033[91m",  # bright red
}

# Attribute set on records emitted by `log_check`
CHECK_ATTRIBUTE = "check_passed"


class LabFormatter(logging.Formatter):
    """
    Logging formatter with ANSI coloring and a dedicated layout for check results.

    Parameters
    ----------
    show_location : bool, optional
        Whether to include file/module/line number in the title.
    show_exc_info : bool, optional
        Whether to include the exception type and message in the description.
    show_traceback : bool, optional
        Whether to include full traceback if exception info is set.
    use_color : bool, optional
        Whether to emit ANSI color codes at all.
    """

    def __init__(
        self,
        *args,
        show_location: bool = False,
        show_exc_info: bool = False,
        show_traceback: bool = False,
        use_color: bool = True,
        **kwargs,
    ) -> None:
        self.show_location = show_location
        self.show_exc_info = show_exc_info
        self.show_traceback = show_traceback
        self.use_color = use_color
        super().__init__(*args, **kwargs)

    def _color(self, key: int | str) -> str:
        return COLORS.get(key, RESET) if self.use_color else ""

    def format(self, record: logging.LogRecord) -> str:
        """Format the specified record as text."""
        color = self._color(record.levelno)
        reset = RESET if self.use_color else ""
        message = record.getMessage()
        passed = getattr(record, CHECK_ATTRIBUTE, None)

        if passed is not None:
            key = "PASS" if passed else "FAIL"
            return f"{self._color(key)}[{key}]{reset} {message}"

        if record.levelno == logging.INFO:
            title = "[INFO] "
            description = ""
        elif record.levelno == logging.WARNING:
            title = self.add_info_to_title("[WARNING]", record)
            description = self.add_to_description("", record)
        elif record.levelno >= logging.ERROR:
            exc_type = record.exc_info[0].__name__ if record.exc_info else "Error"
            title = self.add_info_to_title(f"[ERROR] {exc_type}:", record)
            description = self.add_to_description("", record)
        else:
            title = "[DEBUG] "
            description = self.add_to_description("", record)

        return f"{color}{title}{message}{description}{reset}"

    def add_info_to_title(self, title: str, record: logging.LogRecord) -> str:
        """Return the title with info added according to the settings."""
        if self.show_location:
            loc = f"File {record.pathname}, line {record.lineno}, in {record.module}"
            title = f"{title} {loc}:"

        return f"{title} "

    def add_to_description(self, description: str, record: logging.LogRecord) -> str:
        """Return the description with info added according to the settings."""
        if self.show_exc_info and (info := record.exc_info):
            description = f"{description} {info[0].__name__}: {info[1]}"
        if self.show_traceback and record.exc_info:
            tb_info = "".join(traceback.format_tb(record.exc_info[2]))
            description = f"{description}\n{tb_info}"

        description = description.rstrip()
        return f" {description}" if description else ""


def get_logger(name: str = "fvlab") -> logging.Logger:
    """
    Create and return a logger configured for colored terminal output.

    Calling this function twice does not attach a second handler.

    Parameters
    ----------
    name : str, optional
        Name of the logger.

    Returns
    -------
    logging.Logger
        Configured logger instance writing to standard error at INFO level.
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.INFO)
    logger.propagate = False

    if not logger.handlers:
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(logging.DEBUG)
        console.setFormatter(LabFormatter(use_color=sys.stderr.isatty()))
        logger.addHandler(console)

    return logger


def set_verbosity(verbose: int = 0, quiet: int = 0) -> int:
    """
    Set the package logger level from the CLI counters `-v` and `-q`.

    Parameters
    ----------
    verbose : int, optional
        Number of `-v` flags (each lowers the threshold by one level).
    quiet : int, optional
        Number of `-q` flags (each raises the threshold by one level).

    Returns
    -------
    int
        The logging level that was set.
    """
    level = logging.INFO + 10 * (quiet - verbose)
    level = min(max(level, logging.DEBUG), logging.CRITICAL)
    logger.setLevel(level)
    return level


def log_check(name: str, passed: bool, details: str = "") -> None:
    """Log the outcome of an invariant check as a PASS/FAIL record."""
    message = f"{name}: {details}" if details else name
    level = logging.INFO if passed else logging.ERROR
    logger.log(level, message, extra={CHECK_ATTRIBUTE: passed})


@contextmanager
def timed(label: str) -> Iterator[None]:
    """Log the wall time spent inside the block at debug level."""
    start = time.perf_counter()
    try:
        yield
    finally:
        logger.debug(f"{label} took {time.perf_counter() - start:.3f} s")


logger = get_logger()
