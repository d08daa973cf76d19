"""
Module for general command line interface (CLI) tools.

Includes tools to:
- Achieve a consistent formatting for argparse help.
- Parse the list-valued flags (`--n`, `--eps`, `--code`, `--dist`, `--case`) into
  typed values that argparse and config files share.
"""

import argparse
import textwrap

from fvlab.alphabet import Dist, InvalidDistributionError
from fvlab.asymptotics import geometric_grid
from fvlab.laplace import CATALOG
from fvlab.universal import CODE_NAMES

# Marker at the end of a help text that suppresses the final period
NO_PERIOD = "<FORMATTER:NOPERIOD>"


class ConsistentFormatter(argparse.HelpFormatter):
    """
    Provides an argparse formatter that aims for a consistent appearance.

    - metavars are always shown as "<METAVAR>" (uppercase enforced)
    - choices are always shown together with the metavar
    - text always starts with a capital letter and ends with a punctuation mark
      (to prevent the final punctuation add "<FORMATTER:NOPERIOD>")
    - defaults are appended to the help of options that have one
    """

    def _metavar_formatter(self, action, default_metavar):
        """Format the metavar as "<METAVAR>" and always show choices."""
        if isinstance(
            action,
            argparse._SubParsersAction
            | argparse._SubParsersAction._ChoicesPseudoAction,
        ):
            return lambda tuple_size: (action.metavar or default_metavar,) * tuple_size
        result = action.metavar if action.metavar is not None else default_metavar
        if action.choices is not None:
            choices = f'={{{",".join(map(str, action.choices))}}}'
        else:
            choices = ""

        def format(tuple_size):
            if isinstance(result, tuple):
                return tuple(f"<{str(value).upper()}{choices}>" for value in result)
            return (f"<{str(result).upper()}{choices}>",) * tuple_size

        return format

    def _get_default_metavar_for_optional(self, action) -> str:
        """Make optional metavar defaults uppercase."""
        return super()._get_default_metavar_for_optional(action).upper()

    def _get_default_metavar_for_positional(self, action) -> str:
        """Make positional metavar defaults uppercase."""
        return super()._get_default_metavar_for_positional(action).upper()

    def _get_help_string(self, action) -> str:
        """Append the default value unless it is empty or already mentioned."""
        help_text = action.help or ""
        if (
            "%(default)" not in help_text
            and action.default not in (None, False, argparse.SUPPRESS)
            and action.option_strings
        ):
            help_text = f"{help_text} (default: %(default)s)"
        return help_text

    def _expand_help(self, action) -> str:
        """Get help and enforce sentence style."""
        return self._make_sentence_style(super()._expand_help(action))

    def _fill_text(self, text, width, indent) -> str:
        """Wrap the text to the line length, but keep custom line breaks."""
        return textwrap.fill(
            self._make_sentence_style(text),
            width,
            initial_indent=indent,
            subsequent_indent=indent,
            drop_whitespace=False,
            replace_whitespace=False,
            break_on_hyphens=False,
        )

    @staticmethod
    def _make_sentence_style(text: str) -> str:
        """Enforce a capital letter at the beginning and a punctuation at the end."""
        if text:
            text = text[0].upper() + text[1:]
        if text.endswith(NO_PERIOD):
            return text.removesuffix(NO_PERIOD).rstrip()
        if not text.endswith((".", "!", "?")):
            text += "."
        return text


def _items(text: str) -> list[str]:
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        msg = f"Expected a comma separated list, got '{text}'"
        raise argparse.ArgumentTypeError(msg)
    return items


def parse_n_values(text: str) -> list[int]:
    """
    Parse sequence lengths given as "8", "3,5,8" or a geometric range "a:b[:k]".

    The range form holds k points per doubling (default 4), rounded to integers
    and de-duplicated.

    Raises
    ------
    argparse.ArgumentTypeError
        If the text cannot be parsed or a length is not positive.
    """
    try:
        if ":" in text:
            parts = [int(part) for part in text.split(":")]
            if len(parts) not in (2, 3):
                msg = f"too many fields in '{text}'"
                raise ValueError(msg)
            values = geometric_grid(*parts)
        else:
            values = sorted({int(item) for item in _items(text)})
    except ValueError as err:
        msg = f"Invalid sequence lengths '{text}': {err}"
        raise argparse.ArgumentTypeError(msg) from err
    if values[0] < 1:
        msg = f"Sequence lengths must be positive, got '{text}'"
        raise argparse.ArgumentTypeError(msg)
    return values


def parse_eps_list(text: str) -> list[float]:
    """Parse a comma list of error probabilities in (0, 1)."""
    try:
        values = [float(item) for item in _items(text)]
    except ValueError as err:
        msg = f"Invalid error probabilities '{text}': {err}"
        raise argparse.ArgumentTypeError(msg) from err
    if any(not 0.0 < eps < 1.0 for eps in values):
        msg = f"Error probabilities must lie in (0, 1), got '{text}'"
        raise argparse.ArgumentTypeError(msg)
    return values


def parse_code_list(text: str) -> list[str]:
    """Parse a comma list of code names, "all" selects every code."""
    names = _items(text)
    if names == ["all"]:
        return list(CODE_NAMES)
    unknown = [name for name in names if name not in CODE_NAMES]
    if unknown:
        msg = f"Unknown code(s) {', '.join(unknown)}, choose from {CODE_NAMES}"
        raise argparse.ArgumentTypeError(msg)
    return list(dict.fromkeys(names))


def parse_case_list(text: str) -> list[str]:
    """Parse a comma list of Laplace catalog cases, "all" selects every case."""
    names = _items(text)
    if names == ["all"]:
        return list(CATALOG)
    unknown = [name for name in names if name not in CATALOG]
    if unknown:
        msg = f"Unknown case(s) {', '.join(unknown)}, choose from {CATALOG}"
        raise argparse.ArgumentTypeError(msg)
    return list(dict.fromkeys(names))


def parse_distribution(text: str) -> Dist:
    """Parse a comma list of probabilities summing to one within 1e-9."""
    try:
        return Dist.parse(text, tolerance=1e-9)
    except InvalidDistributionError as err:
        raise argparse.ArgumentTypeError(str(err)) from err
