"""
moilab.experiments
~~~~~~~~~~~~~~~~~~

The experiment registry.  Every experiment takes its validated config and
a worker count and returns an :class:`Outcome`: result rows for the CSV,
extra plot-ready tables, tolerance checks and a JSON summary.

"""
import logging
import math
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, Final

import numpy as np
import scipy.special

from . import config as cfg
from .exceptions import ConfigInvalid, OrderExceeded
from .expansion import (
    EXPANSION_COLUMNS, assembled_remainder, combinatorial_expand, commute1_residual, delta_growth,
    expansion_coeff, fit_power_law, multiset_coeff, taylor_expand, MultiIndex,
)
from .functions import SymbolFunction, poly_function
from .heat import (
    abs_expansion, build_model, dirichlet_coefficients, heat_trace_expansion, mangoldt_table,
    spectral_action_expansion, theta_asymptotic_check, theta_sum, von_mangoldt, zeta_partial,
)
from .hs import (
    DIAGNOSTIC_COLUMNS, QuadratureSpec, hs_apply, hs_apply_report, hs_divided_difference,
    hs_norm_bound, resolvent_bound_scan,
)
from .moi import (
    MoiProblem, derivative_identity_residual, identity_sides, jlo_equality_residual,
    moi_evaluate, moi_norm_bound_check, moi_trace,
)
from .report import AttributeMixin
from .sobolev import estimate_analytic_order, truncation_family
from .spectral import HermitianOperator, apply_function, divided_difference, matrix_from_json, matrix_to_json
from .utils import ordered_map, random_hermitian, random_matrix, spawn_rng

log: Final = logging.getLogger(__name__)

Table = tuple[list[str], list[list[Any]]]


class Check(AttributeMixin):
    '''One declared tolerance: ``value`` must not exceed ``tolerance``.'''
    attrs = ['name', 'value', 'tolerance', 'passed']

    def __init__(self, name: str, value: float, tolerance: float) -> None:
        self.name = name
        self.value = float(value)
        self.tolerance = float(tolerance)
        self.passed = bool(self.value <= self.tolerance)

    def __repr__(self) -> str:
        return '%s %s (%.3e <= %.3e: %s)' % (self.__class__.__name__, self.name, self.value,
                                              self.tolerance, 'ok' if self.passed else 'FAIL')


class Outcome(AttributeMixin):
    attrs = ['experiment', 'passed', 'checks', 'summary']

    def __init__(self, experiment: str, header: list[str], rows: list[list[Any]]) -> None:
        self.experiment = experiment
        self.header = header
        self.rows = rows
        self.tables: dict[str, Table] = {}
        self.checks: list[Check] = []
        self.summary: dict[str, Any] = {}

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, value: float, tolerance: float) -> Check:
        c = Check(name, value, tolerance)
        if not c.passed:
            log.warning('%s: %r', self.experiment, c)
        self.checks.append(c)
        return c

    def __repr__(self) -> str:
        failed = sum(not c.passed for c in self.checks)
        return '%s %s (%d checks, %d failed)' % (self.__class__.__name__, self.experiment,
                                                 len(self.checks), failed)


Runner = Callable[[Any, int], Outcome]
REGISTRY: Final[dict[str, Runner]] = {}


def experiment(name: str) -> Callable[[Runner], Runner]:
    def register(func: Runner) -> Runner:
        REGISTRY[name] = func
        return func
    return register


def list_experiments() -> list[str]:
    return list(cfg.EXPERIMENTS)


def run_experiment(config: cfg.Base, n_jobs: int = 1) -> Outcome:
    name = config.experiment  # type: ignore[attr-defined]
    log.info('running %s with seed %d on %d worker(s)', name, config.seed, n_jobs)
    outcome = REGISTRY[name](config, n_jobs)
    log.info('%r', outcome)
    return outcome


def _relative(lhs: Any, rhs: Any) -> float:
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    if lhs.ndim == 2:
        size = max(1.0, float(np.linalg.norm(lhs, 2)), float(np.linalg.norm(rhs, 2)))
        return float(np.linalg.norm(lhs - rhs, 2)) / size
    return float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))


def _worst(rows: Sequence[Sequence[Any]], column: int) -> float:
    return max((float(r[column]) for r in rows), default=0.0)


def _scaled(M: np.ndarray, norm: float) -> np.ndarray:
    return norm * M / np.linalg.norm(M, 2)


def _seed_for(seed: int, draw: int) -> int:
    return int(spawn_rng(seed, draw).integers(2 ** 31))


def _require(f: SymbolFunction, order: int, what: str) -> None:
    if order > f.max_order:
        raise OrderExceeded('%s needs %d derivatives but %s declares max order %d'
                            % (what, order, f.name, f.max_order), raw=order)


# moi


def _inline_problem(config: cfg.MoiConfig) -> cfg.InlineProblem | None:
    if config.problem is not None:
        return config.problem
    if config.problem_file is None:
        return None
    path = Path(config.problem_file)
    try:
        data = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigInvalid('cannot read problem file %s: %s' % (path, e.strerror), raw=str(path))
    try:
        return cfg.InlineProblem.model_validate_json(data)
    except ValueError as e:
        raise ConfigInvalid('problem file %s: %s' % (path, e), raw=str(path))


def _moi_draw(config: cfg.MoiConfig, f: SymbolFunction, draw: int) -> list[list[Any]]:
    rng = spawn_rng(config.seed, draw)
    dim, n = config.dim, config.n
    H = random_hermitian(dim, rng, 2.0)
    xs = [random_matrix(dim, rng) for _ in range(n)]
    rows = []
    if n:
        Y = random_matrix(dim, rng)
        a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        mixed = moi_evaluate(MoiProblem.divided(f, H, [a * xs[0] + b * Y] + xs[1:]))
        split = (a * moi_evaluate(MoiProblem.divided(f, H, xs))
                 + b * moi_evaluate(MoiProblem.divided(f, H, [Y] + xs[1:])))
        rows.append([draw, 'linearity', _relative(mixed, split)])
    lam = rng.standard_normal(dim)
    if dim > 1:
        lam[1] = lam[0]
    diagonals = [rng.standard_normal(dim) + 1j * rng.standard_normal(dim) for _ in range(n)]
    T = moi_evaluate(MoiProblem.divided(f, np.diag(lam), [np.diag(d) for d in diagonals]))
    expected = f.evaluate(lam, n) / math.factorial(n) * np.prod(diagonals, axis=0)
    rows.append([draw, 'commuting_oracle', _relative(T, np.diag(expected))])
    p = MoiProblem.divided(f, H, xs)
    rows.append([draw, 'trace', _relative(moi_trace(p), np.trace(moi_evaluate(p)))])
    return rows


def _shift_pair(dim: int) -> np.ndarray:
    S = np.eye(dim, k=1)
    return 0.5 * (S + S.T)


def _bound_table(config: cfg.MoiConfig, f: SymbolFunction) -> Table:
    spec = config.bound
    assert spec is not None
    n = len(spec.r)
    rows = []
    for dim in spec.dims:
        W, A = truncation_family(spec.family, [dim]).build(dim)
        p = MoiProblem.divided(f, A, [_shift_pair(dim)] * n)
        report = moi_norm_bound_check(p, W, spec.s, spec.beta, spec.r, levels=spec.levels)
        rows.append([dim, report.lhs, report.rhs_factor, report.fitted_C, report.total_order])
    return ['dim', 'lhs', 'rhs_factor', 'fitted_C', 'total_order'], rows


@experiment('moi')
def run_moi(config: cfg.MoiConfig, n_jobs: int) -> Outcome:
    inline = _inline_problem(config)
    if inline is not None:
        f = inline.f.build()
        _require(f, inline.n, 'an MOI of order %d' % inline.n)
        H = matrix_from_json(inline.H.to_json())
        T = moi_evaluate(MoiProblem.divided(f, H, [matrix_from_json(x.to_json()) for x in inline.X]))
        outcome = Outcome('moi', ['row', 'column', 're', 'im'],
                          [[i, j, T[i, j].real, T[i, j].imag] for i in range(T.shape[0]) for j in range(T.shape[1])])
        outcome.summary['result'] = matrix_to_json(T)
        return outcome
    f = config.function.build()
    _require(f, config.n, 'an MOI of order %d' % config.n)
    rows = [row for batch in ordered_map(lambda d: _moi_draw(config, f, d), range(config.draws), n_jobs)
            for row in batch]
    outcome = Outcome('moi', ['draw', 'check', 'residual'], rows)
    for name, tol in (('linearity', 'linearity'), ('commuting_oracle', 'oracle'), ('trace', 'trace')):
        picked = [r for r in rows if r[1] == name]
        if picked:
            outcome.check(name, _worst(picked, 2), config.tolerance(tol))
    if config.bound is not None:
        outcome.tables['bound'] = _bound_table(config, f)
    return outcome


# identities


def _identity_draw(config: cfg.IdentitiesConfig, spec: cfg.FunctionSpec, draw: int) -> list[list[Any]]:
    f = spec.build()
    rng = spawn_rng(config.seed, draw)
    dim, rows = config.dim, []
    for n in range(1, config.n_max + 1):
        hs = [random_hermitian(dim, rng, 2.0) for _ in range(n + 1)]
        xs = [random_matrix(dim, rng) for _ in range(n)]
        a = random_matrix(dim, rng)
        bump = random_hermitian(dim, rng, 0.5)
        pair = (random_hermitian(dim, rng, 2.0), random_hermitian(dim, rng, 2.0))
        for kind in config.kinds:
            if (kind in ('loewner', 'commutator') and n > 1) or (kind == 'middle' and n < 2):
                continue
            j = None
            if kind == 'middle':
                j = int(rng.integers(1, n))
            elif kind == 'perturbation':
                j = int(rng.integers(0, n + 1))
            lhs, rhs = identity_sides(kind, f, hs, xs, a=bump if kind == 'loewner' else a, pair=pair, j=j)
            rows.append([spec.name, kind, n, draw, -1 if j is None else j, _relative(lhs, rhs)])
    return rows


def _derivative_table(config: cfg.IdentitiesConfig, outcome: Outcome) -> None:
    spec = config.derivative
    f = spec.function.build()
    rows = []
    for n in spec.orders:
        rng = spawn_rng(config.seed, 10_000 + n)
        H = _scaled(random_hermitian(config.dim, rng), 0.9)
        V = random_hermitian(config.dim, rng)
        residual = derivative_identity_residual(f, H, _scaled(V, spec.v_norm), n, spec.h_grid[0])
        decay = [derivative_identity_residual(f, H, _scaled(V, spec.slope_v_norm), n, h) for h in spec.h_grid]
        slope = float(np.polyfit(np.log(spec.h_grid), np.log(decay), 1)[0])
        rows.extend([n, h, r, slope] for h, r in zip(spec.h_grid, decay))
        outcome.check('derivative[n=%d]' % n, residual, config.tolerance('derivative'))
        outcome.check('derivative_slope[n=%d]' % n, abs(slope - 4.0), config.tolerance('derivative_slope'))
    outcome.tables['derivative'] = (['n', 'h', 'residual', 'fitted_slope'], rows)


def _simplex_table(config: cfg.IdentitiesConfig, outcome: Outcome) -> None:
    spec = config.simplex
    rng = spawn_rng(config.seed, 20_000)
    D = random_hermitian(4, rng, 1.0)
    a_list = [random_matrix(4, rng) for _ in range(spec.n + 1)]
    residuals = [jlo_equality_residual(np.eye(4), a_list, D, spec.n, q, spec.rule) for q in spec.quad_pts]
    outcome.tables['simplex'] = (['quad_pts', 'residual'], [list(r) for r in zip(spec.quad_pts, residuals)])
    if spec.rule == 'midpoint' and len(residuals) >= 2 and residuals[-1] > 0:
        expected = (spec.quad_pts[-1] / spec.quad_pts[-2]) ** 2
        ratio = residuals[-2] / residuals[-1]
        outcome.check('simplex_ratio', abs(ratio - expected), config.tolerance('simplex_ratio'))


@experiment('identities')
def run_identities(config: cfg.IdentitiesConfig, n_jobs: int) -> Outcome:
    rows = []
    for spec in config.functions:
        f = spec.build()
        _require(f, config.n_max + 1, 'identities up to order %d' % config.n_max)
        for batch in ordered_map(lambda d: _identity_draw(config, spec, d), range(config.draws), n_jobs):
            rows.extend(batch)
    outcome = Outcome('identities', ['function', 'kind', 'n', 'draw', 'slot', 'residual'], rows)
    for kind in config.kinds:
        picked = [r for r in rows if r[1] == kind]
        if picked:
            outcome.check('identity[%s]' % kind, _worst(picked, 5), config.tolerance('identity'))
    _derivative_table(config, outcome)
    _simplex_table(config, outcome)
    return outcome


# taylor


def _polynomial_case(config: cfg.TaylorConfig, case: int) -> list[Any]:
    rng = spawn_rng(config.seed, 30_000 + case)
    degree = int(rng.integers(2, 6))
    f = poly_function(rng.standard_normal(degree + 1).tolist())
    H = random_hermitian(config.dim, rng, 2.0)
    V = random_hermitian(config.dim, rng, 0.5)
    taylor = taylor_expand(f, H, V, degree)
    n = 1 + case % 2
    combinatorial = combinatorial_expand(f, H, [random_matrix(config.dim, rng) for _ in range(n)],
                                         degree - n, check_remainder=False)
    return [case, degree, n,
            taylor.remainder_norms[-1] / max(1.0, float(np.linalg.norm(taylor.exact, 2))),
            combinatorial.remainder_norms[-1] / max(1.0, float(np.linalg.norm(combinatorial.exact, 2)))]


@experiment('taylor')
def run_taylor(config: cfg.TaylorConfig, n_jobs: int) -> Outcome:
    f = config.function.build()
    _require(f, max(config.orders) + 3, 'a Taylor expansion of order %d' % max(config.orders))
    rows, orders = [], []
    for draw in range(config.draws):
        rng = spawn_rng(config.seed, draw)
        H = random_hermitian(config.dim, rng)
        V = _scaled(random_hermitian(config.dim, rng), config.v_norm)
        for N in config.orders:
            results = ordered_map(lambda s: taylor_expand(f, H, s * V, N), config.scale_grid, n_jobs)
            fit = fit_power_law(config.scale_grid, [r.remainder_norms[N] for r in results], order=N)
            for s, r in zip(config.scale_grid, results):
                rows.append([draw, N, s, r.remainder_norms[N], r.identity_residual, fit.slope])
                orders.extend([[draw, N, s] + row for row in r.rows()])
    outcome = Outcome('taylor', ['draw', 'N', 'scale', 'remainder_norm', 'identity_residual', 'fitted_slope'],
                      rows)
    for N in config.orders:
        slopes = [r[5] for r in rows if r[1] == N]
        outcome.check('slope[N=%d]' % N, max(abs(s - (N + 1)) for s in slopes), config.tolerance('slope'))
    outcome.check('identity', _worst(rows, 4), config.tolerance('identity'))
    exact = ordered_map(lambda c: _polynomial_case(config, c), range(config.polynomial_cases), n_jobs)
    if exact:
        outcome.check('polynomial_taylor', _worst(exact, 3), config.tolerance('exact'))
        outcome.check('polynomial_combinatorial', _worst(exact, 4), config.tolerance('exact'))
    outcome.tables['exactness'] = (['case', 'degree', 'n', 'taylor_remainder', 'combinatorial_remainder'], exact)
    outcome.tables['orders'] = (['draw', 'N', 'scale'] + EXPANSION_COLUMNS, orders)
    return outcome


# combinatorial


def _combinatorial_draw(config: cfg.CombinatorialConfig, f: SymbolFunction, draw: int) -> list[Any]:
    rng = spawn_rng(config.seed, draw)
    H = random_hermitian(config.dim, rng)
    xs = [random_matrix(config.dim, rng) for _ in range(config.n)]
    result = combinatorial_expand(f, H, xs, config.N)
    scale = max(1.0, float(np.linalg.norm(result.exact, 2)))
    printed = math.nan
    if config.n > 1:
        gap = result.exact - result.partial_sums[-1] - assembled_remainder(f, H, xs, config.N, coefficient_start=2)
        printed = float(np.linalg.norm(gap, 2)) / scale
    residual = 0.0 if result.identity_residual is None else result.identity_residual / scale
    return [draw, config.n, config.N, result.remainder_norms[-1], residual, printed]


def _commute1_rows(config: cfg.CombinatorialConfig, f: SymbolFunction, n_jobs: int) -> list[list[Any]]:
    def one(task: tuple[int, cfg.Commute1Case]) -> list[Any]:
        draw, case = task
        rng = spawn_rng(config.seed, 40_000 + draw)
        H = random_hermitian(config.dim, rng)
        xs = [random_matrix(config.dim, rng) for _ in range(case.n)]
        return [case.n, case.j, case.N, draw, commute1_residual(f, H, xs, case.j, case.N)]
    tasks = [(d, c) for c in config.commute1 for d in range(config.draws)]
    return ordered_map(one, tasks, n_jobs)


@experiment('combinatorial')
def run_combinatorial(config: cfg.CombinatorialConfig, n_jobs: int) -> Outcome:
    f = config.function.build()
    _require(f, config.n + config.N + 1, 'a combinatorial expansion with n=%d, N=%d' % (config.n, config.N))
    for case in config.commute1:
        _require(f, case.n + case.j + case.N + 1, 'the one-slot commutation at %s' % case)
    rows = ordered_map(lambda d: _combinatorial_draw(config, f, d), range(config.draws), n_jobs)
    outcome = Outcome('combinatorial', ['draw', 'n', 'N', 'remainder_norm', 'assembled_residual',
                                        'printed_coefficient_residual'], rows)
    outcome.check('assembled_remainder', _worst(rows, 4), config.tolerance('identity'))
    printed = [r[5] for r in rows if not math.isnan(r[5])]
    if printed:
        outcome.summary['printed_coefficient_residual'] = max(printed)
    commute = _commute1_rows(config, f, n_jobs)
    outcome.tables['commute1'] = (['n', 'j', 'N', 'draw', 'residual'], commute)
    if commute:
        outcome.check('commute1', _worst(commute, 4), config.tolerance('identity'))
    mismatches = sum(sum(multiset_coeff(m, l) for l in range(j + 1)) != multiset_coeff(m + 1, j)
                     for m in range(1, config.multiset_max + 1) for j in range(config.multiset_max + 1))
    outcome.check('multiset_identity', mismatches, 0)
    single = sum(expansion_coeff(MultiIndex((m,))) != 1 for m in range(config.multiset_max + 1))
    outcome.check('single_slot_coefficients', single, 0)
    rng = spawn_rng(config.seed, 50_000)
    H = random_hermitian(config.dim, rng)
    growth = delta_growth(H, random_matrix(config.dim, rng), config.growth_orders)
    radius = float(np.max(np.abs(np.linalg.eigvalsh(H))))
    outcome.tables['delta_growth'] = (['m', 'norm'], [[m, v] for m, v in enumerate(growth.norms)])
    outcome.summary['delta_growth'] = {'rate': growth.rate, 'twice_spectral_radius': 2.0 * radius}
    return outcome


# heat-trace and spectral-action


def _expansion_rows(results: Sequence[Any], t_grid: Sequence[float]) -> tuple[list[list[Any]], list[list[Any]]]:
    main, orders = [], []
    for t, r in zip(t_grid, results):
        main.append([t, float(np.real(r.exact)), float(np.real(r.partial_sums[-1])), r.remainder_norms[-1]])
        orders.extend([[t] + row for row in r.rows()])
    return main, orders


def _commuting_rows(config: cfg.HeatTraceConfig, n_jobs: int) -> list[list[Any]]:
    def one(draw: int) -> list[Any]:
        model = build_model('diag', config.commuting_dim, 'diagonal', config.commuting_strength,
                            'random_diagonal', seed=_seed_for(config.seed, draw))
        t, N = config.commuting_t, config.commuting_N
        d, v, p = np.diag(model.D.entries).real, np.diag(model.V).real, np.diag(model.P).real
        A = 2.0 * d * v + v * v
        factor = sum((-t * A) ** n / math.factorial(n) for n in range(N + 1))
        expected = float(np.sum(p * np.exp(-t * d * d) * factor))
        got = heat_trace_expansion(model, N, [t])[0].partial_sums[-1]
        return [draw, expected, float(np.real(got)), _relative(got, expected)]
    return ordered_map(one, range(config.commuting_draws), n_jobs)


def _model(spec: cfg.ModelSpec, seed: int) -> Any:
    return build_model(spec.family, spec.dim, spec.potential, spec.strength, spec.projector, seed=seed)


@experiment('heat-trace')
def run_heat_trace(config: cfg.HeatTraceConfig, n_jobs: int) -> Outcome:
    model = _model(config.model, config.seed)
    if config.kind == 'square':
        results = heat_trace_expansion(model, config.N, config.t_grid, n_jobs)
    else:
        results = abs_expansion(model, config.N, config.t_grid, n_jobs)
    main, orders = _expansion_rows(results, config.t_grid)
    outcome = Outcome('heat-trace', ['t', 'direct', 'expansion_N', 'remainder'], main)
    outcome.tables['orders'] = (['t'] + EXPANSION_COLUMNS, orders)
    fit = fit_power_law(config.t_grid, [r[3] for r in main], order=config.N)
    outcome.summary['fit'] = fit.to_dict()
    if config.kind == 'square':
        expected = (config.N + 1 - config.summability) / 2.0
        outcome.summary['expected_slope'] = expected
        if not fit.exact:
            outcome.check('slope', abs(fit.slope - expected), config.tolerance('slope'))
    commuting = _commuting_rows(config, n_jobs)
    outcome.tables['commuting'] = (['draw', 'closed_form', 'expansion', 'residual'], commuting)
    if commuting:
        outcome.check('commuting', _worst(commuting, 3), config.tolerance('commuting'))
    return outcome


@experiment('spectral-action')
def run_spectral_action(config: cfg.SpectralActionConfig, n_jobs: int) -> Outcome:
    f = config.function.build()
    _require(f, 2 * max(config.N, config.cross_N) + 3, 'a spectral action expansion of order %d'
             % max(config.N, config.cross_N))
    model = _model(config.model, config.seed)
    results = spectral_action_expansion(model, f, config.N, config.t_grid, config.moi_level, n_jobs)
    main, orders = _expansion_rows(results, config.t_grid)
    outcome = Outcome('spectral-action', ['t', 'direct', 'expansion_N', 'remainder'], main)
    outcome.tables['orders'] = (['t'] + EXPANSION_COLUMNS, orders)
    fit = fit_power_law(config.t_grid, [r[3] for r in main], order=config.N)
    expected = config.N + 1 - config.summability
    outcome.summary.update(fit=fit.to_dict(), expected_slope=expected)
    if not fit.exact:
        outcome.check('slope', abs(fit.slope - expected), config.tolerance('slope'))
    small = _model(config.cross_model, config.seed)
    t = config.cross_t
    action = spectral_action_expansion(small, f, config.cross_N, [t], moi_level=True)[0]
    cross = [['spectral_action', float(np.real(action.partial_sums[-1])), action.remainder_norms[-1]],
             ['moi_level', float(np.real(action.companion[-1])), abs(action.exact - action.companion[-1])]]
    if config.function.name == 'gauss' and float(config.function.params.get('a', 1.0)) == 1.0:
        heat = heat_trace_expansion(small, config.cross_N, [t * t])[0]
        cross.append(['heat_trace', float(np.real(heat.partial_sums[-1])), heat.remainder_norms[-1]])
        cross.append(['heat_vs_action', float(np.real(heat.exact)),
                      abs(heat.partial_sums[-1] - action.partial_sums[-1])])
    outcome.tables['cross'] = (['route', 'value', 'gap'], cross)
    outcome.check('cross', max(row[2] for row in cross), config.tolerance('cross'))
    return outcome


# theta-asymptotic and zeta


@experiment('theta-asymptotic')
def run_theta(config: cfg.ThetaConfig, n_jobs: int) -> Outcome:
    fit = theta_asymptotic_check(config.Nmax, config.t_grid, config.exponents)
    rows = [[t, theta_sum(t, config.Nmax), float(fit.predict(t)), residual]
            for t, residual in zip(config.t_grid, fit.residuals)]
    outcome = Outcome('theta-asymptotic', ['t', 'theta_sum', 'fit', 'residual'], rows)
    outcome.summary['fit'] = fit.to_dict()
    coefficients = dict(zip(fit.exponents, fit.coefficients))
    if -0.5 in coefficients:
        outcome.check('c_minus', abs(coefficients[-0.5] - math.sqrt(math.pi) / 2.0), config.tolerance('c_minus'))
    if 0.0 in coefficients:
        outcome.check('c_zero', abs(coefficients[0.0] + 0.5), config.tolerance('c_zero'))
    return outcome


def _zeta_oracle(case: cfg.ZetaCase) -> float:
    x = case.power * case.s
    if case.oracle == 'zeta':
        return float(scipy.special.zeta(x))
    if case.oracle == 'log_zeta':
        return math.log(float(scipy.special.zeta(x)))
    return -case.power * (float(scipy.special.zeta(x)) - 1.0)


def _zeta_case(config: cfg.ZetaConfig, case: cfg.ZetaCase) -> list[Any]:
    coeffs, start = dirichlet_coefficients(case.coefficients)

    def value(s: float) -> float:
        return zeta_partial(coeffs, s, config.nmax, case.power, start).value.real

    if case.mode == 'value':
        got = value(case.s)
    else:
        got = (value(case.s + case.step) - value(case.s - case.step)) / (2.0 * case.step)
    expected = _zeta_oracle(case)
    return [case.coefficients, case.s, case.power, case.mode, got, expected, abs(got - expected)]


@experiment('zeta')
def run_zeta(config: cfg.ZetaConfig, n_jobs: int) -> Outcome:
    rows = ordered_map(lambda c: _zeta_case(config, c), config.cases, n_jobs)
    outcome = Outcome('zeta', ['coefficients', 's', 'power', 'mode', 'value', 'oracle', 'error'], rows)
    for case, row in zip(config.cases, rows):
        outcome.check('%s[%s, s=%g]' % (case.oracle, case.mode, case.s), row[6], case.tolerance)
    worst = max((abs(von_mangoldt(n) - v) for n, v in config.mangoldt_checks.items()), default=0.0)
    outcome.check('mangoldt', worst, config.tolerance('mangoldt'))
    table = mangoldt_table(2000)
    sieve_gap = max(abs(table[n] - von_mangoldt(n)) for n in range(1, 2001))
    outcome.check('mangoldt_sieve', sieve_gap, config.tolerance('mangoldt'))
    rng = spawn_rng(config.seed)
    tails = []
    coeffs, start = dirichlet_coefficients('one')
    for s in rng.uniform(1.2, 3.0, config.tail_draws):
        partial = zeta_partial(coeffs, float(s), 1000, coeff_bound=1.0)
        tails.append([float(s), abs(float(scipy.special.zeta(s)) - partial.value.real), partial.tail_bound])
    outcome.tables['tail_bound'] = (['s', 'error', 'tail_bound'], tails)
    if tails:
        outcome.check('tail_bound', max(r[1] - r[2] for r in tails), 0.0)
    return outcome


# hs-calc


def _quadrature(config: cfg.HsConfig) -> QuadratureSpec:
    return QuadratureSpec(**config.quadrature.model_dump())


def _hs_draw(config: cfg.HsConfig, f: SymbolFunction, draw: int) -> list[list[Any]]:
    rng = spawn_rng(config.seed, draw)
    A = random_hermitian(config.dim, rng, 2.0)
    exact = apply_function(f, HermitianOperator(A))
    quad = _quadrature(config)
    rows = []
    for N in config.N_values:
        for bump in config.bumps:
            got = hs_apply(f, A, N, quad, bump)
            rows.append([draw, N, bump, float(np.linalg.norm(got - exact, 2))])
    return rows


def _independence(config: cfg.HsConfig, f: SymbolFunction) -> tuple[float, float]:
    rng = spawn_rng(config.seed, 60_000)
    A = random_hermitian(config.dim, rng, 2.0)
    quad = _quadrature(config)
    N = config.N_values[-1]
    first, second = (hs_apply(f, A, N, quad, bump) for bump in ('psi', 'smoothstep'))
    scale = quad.abs_tol + quad.rel_tol * float(np.linalg.norm(first, 2))
    return float(np.linalg.norm(first - second, 2)), config.tolerance('independence') * scale


def _divided_case(config: cfg.HsConfig, f: SymbolFunction, case: int) -> list[Any]:
    rng = spawn_rng(config.seed, 70_000 + case)
    n = 1 + case % 3
    nodes = rng.uniform(-2.0, 2.0, n + 1)
    got = hs_divided_difference(f, nodes, config.divided_N, _quadrature(config))
    return [case, n, abs(got - divided_difference(f, nodes))]


def _resolvent_rows(config: cfg.HsConfig) -> list[list[Any]]:
    W, A = truncation_family('harmonic', [config.resolvent_dim]).build(config.resolvent_dim)
    side = max(2, math.ceil(math.sqrt(config.resolvent_points)))
    grid = [complex(x, y) for x in np.linspace(-6.0, 6.0, side) for y in np.geomspace(0.05, 10.0, side)]
    rows = []
    for s in config.resolvent_s:
        scan = resolvent_bound_scan(A, W, s, grid)
        rows.append([s, scan.exponent, scan.fitted_C, len(scan.violations)])
    return rows


@experiment('hs-calc')
def run_hs(config: cfg.HsConfig, n_jobs: int) -> Outcome:
    f = config.function.build()
    _require(f, max(config.N_values + [config.bound_N]) + 3, 'an almost analytic extension')
    rows = [row for batch in ordered_map(lambda d: _hs_draw(config, f, d), range(config.draws), n_jobs)
            for row in batch]
    outcome = Outcome('hs-calc', ['draw', 'N', 'bump', 'error'], rows)
    if rows:
        outcome.check('apply', _worst(rows, 3), config.tolerance('apply'))
    if {'psi', 'smoothstep'} <= set(config.bumps):
        gap, tolerance = _independence(config, f)
        outcome.check('bump_independence', gap, tolerance)
    divided = ordered_map(lambda c: _divided_case(config, f, c), range(config.divided_cases), n_jobs)
    outcome.tables['divided'] = (['case', 'n', 'error'], divided)
    if divided:
        outcome.check('divided', _worst(divided, 2), config.tolerance('divided'))
    resolvent = _resolvent_rows(config)
    outcome.tables['resolvent'] = (['s', 'exponent', 'fitted_C', 'violations'], resolvent)
    outcome.check('resolvent_violations', sum(r[3] for r in resolvent), 0)
    lhs, rhs = hs_norm_bound(f, random_hermitian(config.dim, spawn_rng(config.seed, 80_000), 2.0), config.bound_N)
    outcome.summary['norm_bound'] = {'lhs': lhs, 'rhs': rhs}
    outcome.check('norm_bound', lhs - rhs, 0.0)
    report = hs_apply_report(f, random_hermitian(config.dim, spawn_rng(config.seed, 0), 2.0),
                             config.N_values[-1], _quadrature(config))
    outcome.tables['panels'] = (DIAGNOSTIC_COLUMNS, report.diagnostics)
    outcome.summary['quadrature'] = report.to_dict()
    return outcome


# order-estimate


@experiment('order-estimate')
def run_order(config: cfg.OrderConfig, n_jobs: int) -> Outcome:
    rows = []
    for spec in config.families:
        family = truncation_family(spec.family, config.dims, spec.params)
        estimate = estimate_analytic_order(family, config.r_grid, config.s_probe, n_jobs=n_jobs)
        rows.append([spec.family, spec.params.get('power', math.nan), estimate.order, estimate.bounded_at,
                     math.nan if spec.expected is None else spec.expected])
    outcome = Outcome('order-estimate', ['family', 'power', 'order', 'bounded_at', 'expected'], rows)
    for spec, row in zip(config.families, rows):
        if spec.expected is not None:
            outcome.check('order[%s, %s]' % (spec.family, spec.params), abs(row[2] - spec.expected),
                          config.tolerance('order'))
    return outcome
