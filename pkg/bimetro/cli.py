"""
Command-line front end.

Commands:
- qfi: QFI of an input state through a circuit
- bound: maximal QFI, special cases and the variance-domain corners
- fig4: Gaussian optimum against the general maximum, per N
- gaussian: QFI and number statistics of a pure Gaussian state
- optimal-state: the optimal Fock state for a circuit and budget
- verify: the oracle cross-check suite

States are written ``name:arg,key=value,...``, e.g. ``noon:2``,
``quasi-noon:N=4,var=2``, ``fock:3,1``, ``poisson-cat:N=2,var=4``,
``squeezed-vacuum:r=1.2``, ``coherent:alpha_plus=1+0.5j``.
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from typing import Optional, Sequence

import numpy as np

from bimetro import _config
from bimetro._errors import BimetroError, InvalidState, ParseError, ZeroInformation
from bimetro._logger import logger
from bimetro._metadata import __version__
from bimetro.bounds import (
    SpecialCase,
    cramer_rao,
    domain_corners,
    gaussian_gap,
    h2_corners,
    max_qfi,
    special_case_qfi,
)
from bimetro.circuit import CircuitSpec, generator, generator_from_coefficients
from bimetro.fock import TwoModeFockState, mode_rotate, number_moments, qfi_pure
from bimetro.gaussian import (
    GaussianPureState,
    f_g1_closed_form,
    f_g2_block,
    gaussian_number_moments,
    gaussian_qfi,
    optimal_gaussian,
    to_covariance,
)
from bimetro.oracle import FAULTS, run_checks
from bimetro.states import (
    CONSTRUCTORS,
    REQUIRED,
    NumberBudget,
    physical_input,
    poissonian_cat,
    quasi_noon,
    quasi_noon_rounded,
)
from bimetro.tables import dumps, frame, write_csv, write_parquet

logger.debug(f"Loading module {__name__}.")

__all__ = ["build_parser", "main", "parse_eps", "parse_grid", "parse_state"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
_VERIFY_OFFSET = 2
_EXIT_CAP = 125

FIG4_COLUMNS = ["N", "case", "f_gauss", "f_tilde", "gap", "asymptotic_gap"]
BOUND_COLUMNS = [
    "N",
    "var",
    "eps_plus",
    "eps_minus",
    "max_qfi",
    "delta_phi_min",
    "antisymmetric",
    "symmetric",
    "unbalanced",
]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """
    argparse reports usage errors with exit code 1 instead of 2.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def parse_state(text: str) -> TwoModeFockState:
    """
    Build a state from ``name:arg,...,key=value,...``. Positional arguments
    fill the parameters in order and must come first; unknown or repeated
    keys are errors.
    """
    name, _, body = text.strip().partition(":")
    entry = CONSTRUCTORS.get(name)
    if entry is None:
        raise ParseError(f"Unknown state {name!r}; expected one of {sorted(CONSTRUCTORS)}")
    converters = {key: convert for key, convert, _ in entry.params}
    order = [key for key, _, _ in entry.params]
    values = {}
    seen_keyword = False
    for position, token in enumerate(t.strip() for t in body.split(",") if body.strip()):
        if "=" in token:
            key, _, raw = token.partition("=")
            key = key.strip()
            seen_keyword = True
        else:
            if seen_keyword:
                raise ParseError(f"Positional value {token!r} after a keyword in {text!r}")
            if position >= len(order):
                raise ParseError(f"Too many values for state {name!r}")
            key, raw = order[position], token
        if key not in converters:
            raise ParseError(f"Unknown key {key!r} for state {name!r}; expected {order}")
        if key in values:
            raise ParseError(f"Repeated key {key!r} in {text!r}")
        try:
            values[key] = converters[key](raw.strip())
        except ValueError:
            raise ParseError(f"Cannot read {raw!r} as {converters[key].__name__} for {key!r}") from None
    for key, _, default in entry.params:
        if key not in values:
            if default is REQUIRED:
                raise ParseError(f"State {name!r} needs {key!r}")
            values[key] = default
    return entry.build(**values)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def parse_eps(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ParseError(f"eps must be two comma-separated numbers, got {text!r}") from None
    if len(values) != 2:
        raise ParseError(f"eps must be two comma-separated numbers, got {text!r}")
    return values


def parse_grid(text: str) -> list:
    """
    Budgets written ``N:var,N:var,...``.
    """
    budgets = []
    for token in text.split(","):
        try:
            n, var = (float(v) for v in token.split(":"))
        except ValueError:
            raise ParseError(f"Grid entries must read N:var, got {token!r}") from None
        budgets.append(NumberBudget(n, var))
    if not budgets:
        raise ParseError("Empty budget grid.")
    return budgets


def _delta_phi(qfi: float, nu: int) -> Optional[float]:
    try:
        return cramer_rao(max(qfi, 0.0), nu)
    except ZeroInformation:
        logger.info("CLI: zero Fisher information, the phase uncertainty is unbounded.")
        return None


def _generator_from_args(args):
    if getattr(args, "eps", None):
        ep, em = parse_eps(args.eps)
        return generator_from_coefficients(ep, em, 0j)
    if getattr(args, "case", None):
        ep, em = SpecialCase(args.case).eps
        return generator_from_coefficients(ep, em, 0j)
    return generator(CircuitSpec.from_json(args.circuit), args.phi)


def _emit_table(rows: list, columns: list, args) -> None:
    df = frame(rows, columns)
    if args.parquet:
        write_parquet(df, args.parquet)
    sys.stdout.write(write_csv(df))


def _map_ordered(function, items, workers):
    # results come back in input order whatever the completion order
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(function, items))


def cmd_qfi(args) -> int:
    gen = _generator_from_args(args)
    report = {"eps": list(gen.eps), "phi": args.phi, "trials": args.nu}
    if args.gaussian:
        state = GaussianPureState.from_json(args.gaussian)
        qfi = gaussian_qfi(state, gen)
        mean, var = gaussian_number_moments(state)
        report.update(state=state.to_json(), moments={"mean_total": mean, "var_total": var})
    else:
        state = parse_state(args.state)
        if args.basis == "physical":
            state = mode_rotate(state, gen.mixing)
        qfi = qfi_pure(state, gen)
        report.update(
            state=args.state,
            basis=args.basis,
            moments=asdict(number_moments(state)),
            truncation_loss=state.truncation_loss,
        )
    report.update(qfi=qfi, delta_phi_min=_delta_phi(qfi, args.nu))
    print(dumps(report))
    return EXIT_OK


def _bound_row(budget: NumberBudget, eps: tuple, nu: int) -> dict:
    qfi = max_qfi(budget, eps)
    row = {
        "N": budget.n_mean,
        "var": budget.var,
        "eps_plus": eps[0],
        "eps_minus": eps[1],
        "max_qfi": qfi,
        "delta_phi_min": _delta_phi(qfi, nu),
    }
    for case in SpecialCase:
        row[case.value] = special_case_qfi(case, budget)[0]
    return row


def cmd_bound(args) -> int:
    gen = _generator_from_args(args)
    eps = gen.eps
    if args.grid:
        budgets = sorted(parse_grid(args.grid), key=lambda b: (b.n_mean, b.var))
        rows = _map_ordered(lambda b: _bound_row(b, eps, args.nu), budgets, args.workers)
        _emit_table(rows, BOUND_COLUMNS, args)
        return EXIT_OK

    if args.n is None:
        raise _UsageError("bound needs --n (and --var) or --grid")
    budget = NumberBudget(args.n, args.var)
    report = _bound_row(budget, eps, args.nu)
    if args.csv or args.parquet:
        _emit_table([report], BOUND_COLUMNS, args)
        return EXIT_OK
    corners = h2_corners(budget, eps)
    c_plus, c_minus = domain_corners(budget)
    report.update(
        corners={"plus": [c_plus.x, c_plus.y], "minus": [c_minus.x, c_minus.y]},
        h2_plus=corners.h2_plus,
        h2_minus=corners.h2_minus,
        degenerate_maximum=corners.degenerate_maximum,
    )
    print(dumps(report))
    return EXIT_OK


def _fig4_rows(n: float) -> list:
    rows = []
    for case in SpecialCase:
        gap = gaussian_gap(case.eps, n)
        rows.append(
            {
                "N": n,
                "case": case.value,
                "f_gauss": gap.f_gauss,
                "f_tilde": gap.f_tilde,
                "gap": gap.relative_gap,
                "asymptotic_gap": gap.asymptotic_gap,
            }
        )
    return rows


def cmd_fig4(args) -> int:
    if args.n_values:
        try:
            values = sorted(float(v) for v in args.n_values.split(","))
        except ValueError:
            raise ParseError(f"--n-values must be comma-separated numbers, got {args.n_values!r}") from None
    else:
        if args.n_min <= 0 or args.n_max < args.n_min:
            raise _UsageError("fig4 needs 0 < --n-min <= --n-max")
        values = [float(n) for n in range(args.n_min, args.n_max + 1)]
    rows = [row for chunk in _map_ordered(_fig4_rows, values, args.workers) for row in chunk]
    if args.json:
        print(dumps({"rows": rows}))
        return EXIT_OK
    _emit_table(rows, FIG4_COLUMNS, args)
    return EXIT_OK


def cmd_gaussian(args) -> int:
    gen = _generator_from_args(args)
    if args.state:
        state = GaussianPureState.from_json(args.state)
    elif args.optimal is not None:
        state, _ = optimal_gaussian(args.optimal, gen)
    else:
        raise _UsageError("gaussian needs --state JSON or --optimal N")
    qfi = gaussian_qfi(state, gen)
    mean, var = gaussian_number_moments(state)
    cov = to_covariance(state)
    report = {
        "state": state.to_json(),
        "eps": list(gen.eps),
        "qfi": qfi,
        "f_g1": f_g1_closed_form(state.r_plus, state.r_minus, state.angles, gen),
        "f_g2": f_g2_block(state, gen),
        "mean_total": mean,
        "var_total": var,
        "gamma": cov.gamma,
        "d": cov.d,
        "delta_phi_min": _delta_phi(qfi, args.nu),
    }
    print(dumps(report))
    return EXIT_OK


def cmd_optimal_state(args) -> int:
    gen = _generator_from_args(args)
    budget = NumberBudget(args.n, args.var)
    realized = budget
    if args.family == "quasi-noon":
        state = quasi_noon(budget, args.phase)
    elif args.family == "quasi-noon-rounded":
        state, realized = quasi_noon_rounded(budget, args.phase)
    else:
        if not np.isclose(gen.eps_plus + gen.eps_minus, 0.0, atol=1e-12 * max(1.0, abs(gen.eps_plus))):
            raise InvalidState("The Poissonian cat is optimal only when eps+ = -eps-.")
        state = poissonian_cat(budget, cutoff=args.cutoff)
    qfi = qfi_pure(state, gen)
    report = {
        "family": args.family,
        "eps": list(gen.eps),
        "budget": budget.to_json(),
        "realized_budget": realized.to_json(),
        "qfi": qfi,
        "max_qfi": max_qfi(realized, gen.eps),
        "normal_state": state.to_json(),
    }
    if args.physical:
        report["physical_state"] = physical_input(state, gen).to_json()
    print(dumps(report))
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _config.default_seed()
    results = run_checks(seed=seed, samples=args.samples, fault=args.fault)
    failed_groups = sorted({r.group for r in results if not r.passed})
    summary = {
        "seed": seed,
        "samples": args.samples,
        "passed": not failed_groups,
        "failed_groups": failed_groups,
        "checks": [r.to_json() for r in results],
    }
    print(dumps(summary))
    if not failed_groups:
        return EXIT_OK
    return min(_VERIFY_OFFSET + len(failed_groups), _EXIT_CAP)


def _add_generator_options(parser, with_case: bool = False) -> None:
    parser.add_argument("--circuit", default="mach_zehnder", help="catalog name or circuit JSON")
    parser.add_argument("--phi", type=float, default=0.0, help="working point of the phase")
    parser.add_argument("--eps", help="normal-mode eigenvalues 'eps+,eps-', overrides --circuit")
    if with_case:
        parser.add_argument("--case", choices=[c.value for c in SpecialCase], help="special circuit")


def _add_output_options(parser) -> None:
    parser.add_argument("--csv", action="store_true", help="tabular output (default for sweeps)")
    parser.add_argument("--parquet", metavar="PATH", help="also write the table as Parquet")
    parser.add_argument("--workers", type=int, default=None, help="threads for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bimetro", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"bimetro {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("qfi", help="QFI of a state through a circuit")
    _add_generator_options(p)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--state", help="state in the name:key=value mini-language")
    source.add_argument("--gaussian", help="Gaussian state JSON")
    p.add_argument("--basis", choices=["normal", "physical"], default="normal")
    p.add_argument("--nu", type=_positive_int, default=1, help="number of trials")
    p.set_defaults(handler=cmd_qfi)

    p = sub.add_parser("bound", help="maximal QFI at fixed number mean and variance")
    _add_generator_options(p, with_case=True)
    p.add_argument("--n", type=float, help="mean particle number")
    p.add_argument("--var", type=float, default=0.0, help="number variance")
    p.add_argument("--grid", help="budgets 'N:var,N:var,...' (tabular output)")
    p.add_argument("--nu", type=_positive_int, default=1, help="number of trials")
    _add_output_options(p)
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("fig4", help="Gaussian optimum against the general maximum")
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--n-values", help="explicit comma-separated N values")
    p.add_argument("--json", action="store_true", help="JSON instead of CSV")
    _add_output_options(p)
    p.set_defaults(handler=cmd_fig4)

    p = sub.add_parser("gaussian", help="QFI of a pure Gaussian state")
    _add_generator_options(p, with_case=True)
    p.add_argument("--state", help="Gaussian state JSON")
    p.add_argument("--optimal", type=float, metavar="N", help="use the optimal state at mean N")
    p.add_argument("--nu", type=_positive_int, default=1, help="number of trials")
    p.set_defaults(handler=cmd_gaussian)

    p = sub.add_parser("optimal-state", help="optimal Fock state for a budget")
    _add_generator_options(p, with_case=True)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--var", type=float, default=0.0)
    p.add_argument("--family", choices=["quasi-noon", "quasi-noon-rounded", "poisson-cat"], default="quasi-noon")
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--physical", action="store_true", help="also emit the state in the physical modes")
    p.set_defaults(handler=cmd_optimal_state)

    p = sub.add_parser("verify", help="run the oracle cross-checks")
    p.add_argument("--seed", type=int, default=None, help=f"defaults to ${_config.SEED_ENV_VAR} or the config")
    p.add_argument("--samples", type=_positive_int, default=10_000)
    p.add_argument("--fault", choices=FAULTS, help=argparse.SUPPRESS)
    p.set_defaults(handler=cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except _UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"bimetro: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BimetroError as e:
        print(f"bimetro: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
