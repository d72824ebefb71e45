"""
moilab.config
~~~~~~~~~~~~~

Experiment file schema and runtime settings.

"""
import json
import logging
from pathlib import Path
from typing import Annotated, Any, ClassVar, Final, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigInvalid
from .functions import SymbolFunction, from_spec

log: Final = logging.getLogger(__name__)

EXPERIMENTS: Final = ('moi', 'identities', 'taylor', 'combinatorial', 'heat-trace', 'spectral-action',
                      'theta-asymptotic', 'zeta', 'hs-calc', 'order-estimate')


class LabSettings(BaseSettings):
    '''Process-wide runtime settings, read from MOILAB_* variables.'''
    model_config = SettingsConfigDict(env_prefix='moilab_')

    threads: int = Field(1, ge=1)
    out_dir: Path = Path('results')
    log_level: str = 'WARNING'

    current: ClassVar[Optional['LabSettings']] = None

    @classmethod
    def activate(cls, **kwargs: Any) -> 'LabSettings':
        '''Build settings from the environment, overridden by ``kwargs``, and
        make them current.'''
        settings = cls(**{k: v for k, v in kwargs.items() if v is not None})
        cls.set_current(settings)
        return settings

    @classmethod
    def set_current(cls, settings: 'LabSettings') -> None:
        cls.current = settings

    @classmethod
    def get_current(cls) -> 'LabSettings':
        if cls.current is None:
            cls.current = cls()
        return cls.current


class Strict(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class FunctionSpec(Strict):
    name: str
    params: dict[str, Any] = {}

    def build(self) -> SymbolFunction:
        try:
            return from_spec(self.name, self.params)
        except (TypeError, ValueError) as e:
            raise ConfigInvalid('function %r: %s' % (self.name, e), raw=self.name)


class MatrixSpec(Strict):
    '''Matrix in the {"dim", "re", "im"} encoding.'''
    dim: int = Field(ge=1)
    re: list[list[float]]
    im: Optional[list[list[float]]] = None

    @model_validator(mode='after')
    def _shape(self) -> 'MatrixSpec':
        for part in (self.re, self.im or self.re):
            if len(part) != self.dim or any(len(row) != self.dim for row in part):
                raise ValueError('matrix rows must be %d lists of %d numbers' % (self.dim, self.dim))
        return self

    def to_json(self) -> dict:
        return self.model_dump(exclude_none=True)


class Output(Strict):
    csv: Optional[str] = None
    json_file: Optional[str] = Field(None, alias='json')


class Base(Strict):
    seed: int = 0
    tolerances: dict[str, float] = {}
    output: Output = Output()

    defaults: ClassVar[dict[str, float]] = {}

    def tolerance(self, name: str) -> float:
        return self.tolerances.get(name, self.defaults[name])

    @model_validator(mode='after')
    def _known_tolerances(self) -> 'Base':
        unknown = sorted(set(self.tolerances) - set(self.defaults))
        if unknown:
            raise ValueError('unknown tolerances %s, expected some of %s' % (unknown, sorted(self.defaults)))
        return self


class InlineProblem(Strict):
    '''{"f": ..., "H": ..., "X": [...], "n": k}'''
    f: FunctionSpec
    H: MatrixSpec
    X: list[MatrixSpec] = []
    n: int = Field(ge=0)

    @model_validator(mode='after')
    def _count(self) -> 'InlineProblem':
        if len(self.X) != self.n:
            raise ValueError('n = %d but %d arguments given' % (self.n, len(self.X)))
        return self


class NormBoundSpec(Strict):
    family: Literal['diag_linear', 'diag_power', 'harmonic'] = 'diag_linear'
    dims: list[int] = [20, 40, 80]
    s: float = 0.0
    beta: list[float] = [0.0, 0.0]
    r: list[float] = [0.0]
    levels: Optional[list[float]] = None


class MoiConfig(Base):
    experiment: Literal['moi']
    function: FunctionSpec = FunctionSpec(name='exp')
    problem: Optional[InlineProblem] = None
    problem_file: Optional[str] = None
    dim: int = Field(6, ge=1, le=12)
    n: int = Field(2, ge=0, le=4)
    draws: int = Field(10, ge=1)
    bound: Optional[NormBoundSpec] = None

    defaults: ClassVar[dict[str, float]] = {'linearity': 1e-10, 'oracle': 1e-10, 'trace': 1e-10}


class DerivativeSpec(Strict):
    function: FunctionSpec = FunctionSpec(name='exp')
    orders: list[int] = [1, 2]
    h_grid: list[float] = [1e-2, 5e-3, 2.5e-3]
    v_norm: float = 1.0
    slope_v_norm: float = 4.0


class SimplexSpec(Strict):
    n: int = Field(1, ge=0, le=3)
    quad_pts: list[int] = [64, 128]
    rule: Literal['midpoint', 'gauss'] = 'midpoint'


class IdentitiesConfig(Base):
    experiment: Literal['identities']
    functions: list[FunctionSpec] = [FunctionSpec(name='exp'), FunctionSpec(name='rational'),
                                     FunctionSpec(name='poly', params={'coeffs': [1, -1, 0.5, 0.2, -0.1, 0.05]})]
    kinds: list[Literal['left', 'middle', 'right', 'perturbation', 'loewner', 'commutator']] = [
        'left', 'middle', 'right', 'perturbation', 'loewner', 'commutator']
    dim: int = Field(6, ge=1, le=8)
    n_max: int = Field(3, ge=1, le=3)
    draws: int = Field(50, ge=1)
    derivative: DerivativeSpec = DerivativeSpec()
    simplex: SimplexSpec = SimplexSpec()

    defaults: ClassVar[dict[str, float]] = {
        'identity': 1e-9, 'derivative': 1e-6, 'derivative_slope': 0.3, 'simplex_ratio': 0.5}


class TaylorConfig(Base):
    experiment: Literal['taylor']
    function: FunctionSpec = FunctionSpec(name='exp')
    dim: int = Field(6, ge=1)
    orders: list[int] = [1, 2, 3]
    scale_grid: list[float] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3]
    v_norm: float = 3.0
    draws: int = Field(1, ge=1)
    polynomial_cases: int = Field(20, ge=0)

    defaults: ClassVar[dict[str, float]] = {'slope': 0.1, 'exact': 1e-9, 'identity': 1e-9}


class Commute1Case(Strict):
    n: int = Field(ge=1)
    j: int = Field(ge=0)
    N: int = Field(ge=0)


class CombinatorialConfig(Base):
    experiment: Literal['combinatorial']
    function: FunctionSpec = FunctionSpec(name='exp')
    dim: int = Field(5, ge=1)
    n: int = Field(2, ge=0)
    N: int = Field(3, ge=0)
    draws: int = Field(20, ge=1)
    commute1: list[Commute1Case] = [Commute1Case(n=1, j=0, N=0), Commute1Case(n=2, j=2, N=3),
                                    Commute1Case(n=2, j=1, N=2)]
    multiset_max: int = Field(12, ge=0)
    growth_orders: int = Field(8, ge=1)

    defaults: ClassVar[dict[str, float]] = {'identity': 1e-9, 'exact': 1e-9}


class ModelSpec(Strict):
    family: Literal['diag', 'harmonic'] = 'diag'
    dim: int = Field(400, ge=1)
    potential: Literal['zero', 'constant', 'diagonal', 'random'] = 'constant'
    strength: float = 0.05
    projector: Literal['identity', 'random_diagonal'] = 'identity'


class HeatTraceConfig(Base):
    experiment: Literal['heat-trace']
    model: ModelSpec = ModelSpec()
    kind: Literal['square', 'abs'] = 'square'
    N: int = Field(2, ge=0)
    t_grid: list[float] = [2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2, 6.4e-2]
    summability: float = 1.0
    commuting_draws: int = Field(20, ge=0)
    commuting_dim: int = Field(8, ge=1)
    commuting_strength: float = 0.3
    commuting_N: int = Field(6, ge=0)
    commuting_t: float = 0.1

    defaults: ClassVar[dict[str, float]] = {'slope': 0.15, 'commuting': 1e-9}


class SpectralActionConfig(Base):
    experiment: Literal['spectral-action']
    model: ModelSpec = ModelSpec(dim=1600)
    function: FunctionSpec = FunctionSpec(name='gauss')
    N: int = Field(2, ge=0)
    t_grid: list[float] = [5e-3, 1e-2, 2e-2, 4e-2, 8e-2, 0.12, 0.2]
    moi_level: bool = False
    summability: float = 1.0
    cross_model: ModelSpec = ModelSpec(dim=3, potential='random', strength=0.1)
    cross_N: int = Field(10, ge=0)
    cross_t: float = 0.1

    defaults: ClassVar[dict[str, float]] = {'slope': 0.15, 'cross': 1e-9}


class ThetaConfig(Base):
    experiment: Literal['theta-asymptotic']
    Nmax: int = Field(2000, ge=1)
    t_grid: list[float] = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1]
    exponents: list[float] = [-0.5, 0.0]

    defaults: ClassVar[dict[str, float]] = {'c_minus': 1e-4, 'c_zero': 1e-3}


class ZetaCase(Strict):
    coefficients: Literal['one', 'inv_log', 'mangoldt_over_log']
    s: float
    power: float = 1.0
    mode: Literal['value', 'derivative'] = 'value'
    oracle: Literal['zeta', 'log_zeta', 'zeta_tail_derivative']
    step: float = 1e-4
    tolerance: float = 1e-4


class ZetaConfig(Base):
    experiment: Literal['zeta']
    nmax: int = Field(100000, ge=2)
    cases: list[ZetaCase] = [
        ZetaCase(coefficients='one', s=2.0, oracle='zeta'),
        ZetaCase(coefficients='inv_log', s=1.0, power=2.0, mode='derivative', oracle='zeta_tail_derivative',
                 tolerance=1e-3),
        ZetaCase(coefficients='mangoldt_over_log', s=2.0, oracle='log_zeta'),
    ]
    mangoldt_checks: dict[int, float] = {1: 0.0, 8: 0.6931471805599453, 12: 0.0, 9973: 9.207636157000237}
    tail_draws: int = Field(20, ge=0)

    defaults: ClassVar[dict[str, float]] = {'mangoldt': 1e-12}


class QuadratureOptions(Strict):
    points: int = Field(8, ge=2)
    rel_tol: float = 1e-8
    abs_tol: float = 1e-11
    max_panels: int = Field(20000, ge=1)
    max_depth: int = Field(30, ge=1)


class HsConfig(Base):
    experiment: Literal['hs-calc']
    function: FunctionSpec = FunctionSpec(name='gauss')
    dim: int = Field(5, ge=1)
    draws: int = Field(10, ge=0)
    N_values: list[int] = [2, 3, 4]
    bumps: list[Literal['psi', 'smoothstep']] = ['psi', 'smoothstep']
    divided_cases: int = Field(30, ge=0)
    divided_N: Optional[int] = None
    quadrature: QuadratureOptions = QuadratureOptions()
    resolvent_s: list[float] = [0.0, 1.0]
    resolvent_dim: int = Field(40, ge=2)
    resolvent_points: int = Field(50, ge=1)
    bound_N: int = Field(2, ge=1)

    defaults: ClassVar[dict[str, float]] = {'apply': 1e-4, 'divided': 1e-5, 'independence': 10.0}


class OrderFamilySpec(Strict):
    family: Literal['diag_linear', 'diag_power', 'harmonic']
    params: dict[str, float] = {}
    expected: Optional[float] = None


class OrderConfig(Base):
    experiment: Literal['order-estimate']
    dims: list[int] = [50, 100, 200, 400]
    families: list[OrderFamilySpec] = [
        OrderFamilySpec(family='diag_linear', params={'power': 0.0}, expected=0.0),
        OrderFamilySpec(family='diag_linear', params={'power': 1.0}, expected=1.0),
        OrderFamilySpec(family='diag_linear', params={'power': 2.0}, expected=2.0),
    ]
    r_grid: Optional[list[float]] = None
    s_probe: float = 0.0

    defaults: ClassVar[dict[str, float]] = {'order': 0.05}


ExperimentConfig = Annotated[
    Union[MoiConfig, IdentitiesConfig, TaylorConfig, CombinatorialConfig, HeatTraceConfig,
          SpectralActionConfig, ThetaConfig, ZetaConfig, HsConfig, OrderConfig],
    Field(discriminator='experiment'),
]

_adapter: TypeAdapter = TypeAdapter(ExperimentConfig)


def _field_path(loc: tuple) -> str:
    return '.'.join(str(part) for part in loc) or '<root>'


def parse_config(data: Any) -> Base:
    '''Validate decoded JSON into the config of its experiment.'''
    try:
        return _adapter.validate_python(data)
    except ValidationError as e:
        problems = ['%s: %s' % (_field_path(err['loc']), err['msg']) for err in e.errors()]
        raise ConfigInvalid('invalid experiment config: ' + '; '.join(problems), raw=e.errors())


def load_config(path: str | Path) -> Base:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigInvalid('cannot read %s: %s' % (path, e.strerror), raw=str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigInvalid('%s: line %d column %d: %s' % (path, e.lineno, e.colno, e.msg), raw=str(path))
    config = parse_config(data)
    log.debug('loaded %s config from %s', config.experiment, path)  # type: ignore[attr-defined]
    return config


def bundled_config(name: str) -> Path:
    '''Path of the default config shipped for ``name``.'''
    if name not in EXPERIMENTS:
        raise ValueError('unknown experiment %r' % name)
    return Path(__file__).parent / 'configs' / ('%s.json' % name)
