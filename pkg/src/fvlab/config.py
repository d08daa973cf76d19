"""
Module for the run configuration of the command line interface.

Includes tools to:
- Define and validate the settings of one `fvlab` run (`RunConfig`).
- Add the settings as grouped arguments to an argparse parser and read them back.
- Read the settings from a JSON file, with explicit flags taking precedence.
"""

import argparse
import json
from collections.abc import Iterable, Sequence
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path

from fvlab.alphabet import Dist, InvalidDistributionError
from fvlab.cli_tools import (
    parse_case_list,
    parse_code_list,
    parse_distribution,
    parse_eps_list,
    parse_n_values,
)
from fvlab.laplace import CATALOG
from fvlab.universal import CODE_NAMES

COMMANDS = ("rates", "sweep", "converse", "verify", "laplace")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Raised for invalid run configurations (bad flags or config file)."""


def _option(
    flag: str,
    group: str,
    help: str,
    parse=None,
    metavar: str | None = None,
    **kwargs,
) -> dict:
    """Return the field metadata that `RunConfig.add_to_argparser` reads."""
    return {
        "flag": flag,
        "group": group,
        "help": help,
        "parse": parse,
        "metavar": metavar,
        **kwargs,
    }


@dataclass(kw_only=True)
class RunConfig:
    """
    Settings of one run of a subcommand.

    Every computation is deterministic, so there is no seed.

    Attributes
    ----------
    command : str
        Subcommand, one of `COMMANDS`.
    m : int or None
        Alphabet size, taken from `dist` if not given.
    dist : Dist or None
        Source law. Defaults to the uniform law when only `m` is given.
    n : list of int or None
        Sequence lengths, the subcommand picks a default if None.
    eps : list of float
        Error probabilities.
    codes : list of str or None
        Code names, None selects every code applicable to the alphabet.
    gamma : float or None
        Level of the entropy sphere, None uses J(dist) at each (n, eps).
    fmt : str
        Report format, "csv" or "json".
    out, summary : Path or None
        Report and fit-summary paths, standard output if None.
    max_n, sandwich_n, interleave_n : int
        Scale of the oracle, sandwich and interleaving checks of `verify`.
    resolution : int
        Number of grid points of the entropy sphere.
    beta_floor : float
        Grid points with a smaller probability are dropped.
    tolerance : float
        Accepted distance of a fitted slope from its target.
    cases : list of str
        Laplace catalog cases.
    """

    command: str = "rates"
    m: int | None = field(
        default=None,
        metadata=_option("--m", "source", "alphabet size", type=int),
    )
    dist: Dist | None = field(
        default=None,
        metadata=_option(
            "--dist",
            "source",
            "comma separated probabilities (default: uniform on m symbols)",
            parse=parse_distribution,
            metavar="P1,P2,...",
        ),
    )
    n: list[int] | None = field(
        default=None,
        metadata=_option(
            "--n",
            "source",
            "sequence length(s): N, N1,N2,... or a geometric range A:B[:K]",
            parse=parse_n_values,
            metavar="N",
        ),
    )
    eps: list[float] = field(
        default_factory=lambda: [0.1],
        metadata=_option(
            "--eps",
            "source",
            "comma separated error probabilities in (0, 1)",
            parse=parse_eps_list,
            metavar="EPS",
        ),
    )
    codes: list[str] | None = field(
        default=None,
        metadata=_option(
            "--code",
            "codes",
            f"comma separated codes from {{{','.join(CODE_NAMES)}}} or 'all'",
            parse=parse_code_list,
            metavar="CODE",
        ),
    )
    gamma: float | None = field(
        default=None,
        metadata=_option(
            "--gamma",
            "converse",
            "level Gamma of the entropy sphere (default: J(P) at each n and eps)",
            type=float,
        ),
    )
    resolution: int = field(
        default=64,
        metadata=_option(
            "--resolution", "converse", "number of entropy sphere points", type=int
        ),
    )
    beta_floor: float = field(
        default=0.01,
        metadata=_option(
            "--beta-floor",
            "converse",
            "drop grid points with a probability below this value",
            type=float,
        ),
    )
    tolerance: float = field(
        default=0.35,
        metadata=_option(
            "--tolerance",
            "sweep",
            "accepted distance of a fitted slope from its target",
            type=float,
        ),
    )
    summary: Path | None = field(
        default=None,
        metadata=_option(
            "--summary",
            "sweep",
            "path of the JSON fit summary",
            type=Path,
            metavar="PATH",
        ),
    )
    max_n: int = field(
        default=8,
        metadata=_option(
            "--max-n", "verify", "largest n of the oracle checks", type=int
        ),
    )
    sandwich_n: int = field(
        default=100,
        metadata=_option(
            "--sandwich-n", "verify", "largest n of the type-size sandwich", type=int
        ),
    )
    interleave_n: int = field(
        default=200,
        metadata=_option(
            "--interleave-n",
            "verify",
            "largest n of the type-level one-extra-bit check",
            type=int,
        ),
    )
    cases: list[str] = field(
        default_factory=lambda: list(CATALOG),
        metadata=_option(
            "--case",
            "laplace",
            f"comma separated cases from {{{','.join(CATALOG)}}} or 'all'",
            parse=parse_case_list,
            metavar="CASE",
        ),
    )
    fmt: str = field(
        default="csv",
        metadata=_option(
            "--format", "output", "report format", choices=FORMATS, metavar="FMT"
        ),
    )
    out: Path | None = field(
        default=None,
        metadata=_option(
            "--out",
            "output",
            "report path (default: standard output)",
            type=Path,
            metavar="PATH",
        ),
    )

    def __post_init__(self) -> None:
        """Coerce and validate the settings."""
        if self.command not in COMMANDS:
            msg = f"Unknown command '{self.command}', choose from {COMMANDS}!"
            raise ConfigError(msg)
        if self.dist is not None and not isinstance(self.dist, Dist):
            try:
                self.dist = Dist.from_values(self.dist, tolerance=1e-9)
            except InvalidDistributionError as err:
                raise ConfigError(str(err)) from err
        if self.dist is None and self.m is not None:
            if self.m < 1:
                msg = f"The alphabet size must be positive, got {self.m}!"
                raise ConfigError(msg)
            self.dist = Dist.uniform(self.m)
        if self.dist is not None:
            if self.m is not None and self.m != self.dist.m:
                msg = f"--m {self.m} does not match the {self.dist.m} probabilities!"
                raise ConfigError(msg)
            self.m = self.dist.m

        if self.n is not None:
            self.n = sorted({int(n) for n in self.n})
            if not self.n or self.n[0] < 1:
                msg = f"Sequence lengths must be positive, got {self.n}!"
                raise ConfigError(msg)
        self.eps = [float(eps) for eps in self.eps]
        if not self.eps or any(not 0.0 < eps < 1.0 for eps in self.eps):
            msg = f"Error probabilities must lie in (0, 1), got {self.eps}!"
            raise ConfigError(msg)
        if self.codes is not None:
            unknown = [code for code in self.codes if code not in CODE_NAMES]
            if unknown or not self.codes:
                msg = f"Unknown codes {unknown}, choose from {CODE_NAMES}!"
                raise ConfigError(msg)
        unknown = [case for case in self.cases if case not in CATALOG]
        if unknown:
            msg = f"Unknown Laplace cases {unknown}, choose from {CATALOG}!"
            raise ConfigError(msg)
        if self.fmt not in FORMATS:
            msg = f"Unknown format '{self.fmt}', choose from {FORMATS}!"
            raise ConfigError(msg)
        for name in ("resolution", "max_n", "sandwich_n", "interleave_n"):
            if getattr(self, name) < 1:
                msg = f"'{name}' must be positive, got {getattr(self, name)}!"
                raise ConfigError(msg)
        if self.gamma is not None and self.gamma <= 0:
            msg = f"Gamma must be positive, got {self.gamma}!"
            raise ConfigError(msg)
        if self.out is not None:
            self.out = Path(self.out)
        if self.summary is not None:
            self.summary = Path(self.summary)

    @property
    def code_names(self) -> list[str]:
        """Selected codes, the interleaved code only for binary sources."""
        if self.codes is not None:
            return list(self.codes)
        return [code for code in CODE_NAMES if code != "interleave" or self.m == 2]

    def require_dist(self) -> Dist:
        """
        Return the source law.

        Raises
        ------
        ConfigError
            If neither `--dist` nor `--m` was given.
        """
        if self.dist is None:
            msg = f"'{self.command}' needs a source, set --dist or --m!"
            raise ConfigError(msg)
        return self.dist

    def is_default(self, name: str) -> bool:
        """
        Check whether a field is set to its default value.

        Raises
        ------
        AttributeError
            If the field name is invalid.
        """
        for _field in fields(self):
            if _field.name == name:
                return getattr(self, name) == self.get_field_default(_field)
        msg = f"Field '{name}' unknown!"
        raise AttributeError(msg)

    @staticmethod
    def get_field_default(_field):
        """Return the default value of a dataclass field."""
        if _field.default is not MISSING:
            return _field.default
        if _field.default_factory is not MISSING:
            return _field.default_factory()
        return None

    @property
    def nice_str(self) -> str:
        """Return the non-default settings, one per line."""
        values = {
            _field.name: getattr(self, _field.name)
            for _field in fields(self)
            if _field.name == "command" or not self.is_default(_field.name)
        }
        n_max = max(map(len, values.keys()))
        return "\n".join(f"{name:<{n_max}} {value}" for name, value in values.items())

    @classmethod
    def add_to_argparser(
        cls,
        parser: argparse.ArgumentParser,
        ignore: Iterable[str] | None = None,
    ) -> None:
        """
        Add the settings as grouped arguments to a parser.

        Absent flags do not appear in the parsed namespace, so values from a
        config file are only overridden by flags that are given explicitly.

        Parameters
        ----------
        parser : argparse.ArgumentParser
            Argument parser to modify.
        ignore : iterable of str, optional
            Field names to leave out.
        """
        ignore = set(ignore or ())
        groups: dict[str, argparse._ArgumentGroup] = {}
        for _field in fields(cls):
            options = dict(_field.metadata)
            if not options or _field.name in ignore:
                continue
            flag = options.pop("flag")
            group_name = options.pop("group")
            if group_name not in groups:
                groups[group_name] = parser.add_argument_group(f"{group_name} options")
            parse = options.pop("parse")
            if parse is not None:
                options["type"] = parse
            if options["metavar"] is None:
                options.pop("metavar")
            default = cls.get_field_default(_field)
            if default is not None:
                if isinstance(default, list):
                    default = ",".join(map(str, default))
                options["help"] = f"{options['help']} (default: {default})"
            groups[group_name].add_argument(
                flag, dest=_field.name, default=argparse.SUPPRESS, **options
            )
        parser.add_argument(
            "--config",
            metavar="FILE",
            type=Path,
            default=argparse.SUPPRESS,
            help="JSON file with settings, explicit flags take precedence",
        )

    @classmethod
    def from_argparser(cls, args: argparse.Namespace) -> "RunConfig":
        """
        Create a configuration from parsed arguments and an optional config file.

        Raises
        ------
        ConfigError
            If the settings are invalid.
        """
        values = vars(args)
        settings = {}
        if (path := values.get("config")) is not None:
            settings.update(cls._read_file(path))
        names = {_field.name for _field in fields(cls)}
        settings.update({k: v for k, v in values.items() if k in names})
        if (command := values.get("command")) is not None:
            settings["command"] = command
        return cls(**settings)

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        """Create a configuration from a JSON file, keys are field names."""
        settings = cls._read_file(path)
        settings.update(overrides)
        return cls(**settings)

    @classmethod
    def _read_file(cls, path: str | Path) -> dict:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            msg = f"Cannot read config file '{path}': {err}!"
            raise ConfigError(msg) from err
        if not isinstance(data, dict):
            msg = f"Config file '{path}' must hold a JSON object!"
            raise ConfigError(msg)

        known = {_field.name: _field for _field in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            msg = f"Unknown settings {unknown} in config file '{path}'!"
            raise ConfigError(msg)
        settings = {}
        for name, value in data.items():
            parse = known[name].metadata.get("parse")
            if parse is not None and value is not None:
                value = cls._coerce(parse, value)
            settings[name] = value
        return settings

    @staticmethod
    def _coerce(parse, value):
        if isinstance(value, Sequence) and not isinstance(value, str):
            value = ",".join(map(str, value))
        try:
            return parse(str(value))
        except argparse.ArgumentTypeError as err:
            raise ConfigError(str(err)) from err
