import hashlib
import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .exceptions import ScenarioInvalid
from .least_favorable import (
    assemble,
    backward_recursion,
    certificate_sweep,
    certify,
    stabilizing_check,
    steady_backward,
)
from .performance import MonteCarloPlan, compare_synthesized
from .robust_filter import estimate_c_max, run_forward, steady_state
from .serializers import ScenarioSerializer


logger = logging.getLogger(__name__)


def scenario_digest(raw):
    canonical = json.dumps(raw, sort_keys=True, separators=(',', ':'), ensure_ascii=True)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated scenario; equality and hashing go through the content digest."""
    digest: str
    model: object
    c: object
    T: int
    rho_grid: int
    mc: MonteCarloPlan = None
    c_max_options: dict = None
    outputs: str = None

    def __hash__(self):
        return hash(self.digest)

    def __eq__(self, other):
        return isinstance(other, Scenario) and other.digest == self.digest

    @property
    def auto_c(self):
        return self.c == 'auto'

    @classmethod
    def from_data(cls, raw):
        serializer = ScenarioSerializer(data=raw)
        if not serializer.is_valid():
            raise ScenarioInvalid(json.dumps(serializer.errors, sort_keys=True), operation='scenario')
        data = serializer.validated_data
        mc = data.get('mc')
        return cls(
            digest=scenario_digest(raw),
            model=data['state_space'],
            c=data['c'],
            T=data['T'],
            rho_grid=data['rho_grid'],
            mc=MonteCarloPlan(N=mc['N'], T=mc['T'], seed=mc['seed']) if mc else None,
            c_max_options=dict(data.get('c_max', {})),
            outputs=data.get('outputs'),
        )

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as exc:
            raise ScenarioInvalid(f"cannot read {path}: {exc.strerror}", operation='scenario') from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioInvalid(
                f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                operation='scenario') from exc
        if not isinstance(raw, dict):
            raise ScenarioInvalid(f"{path}: top level must be an object", operation='scenario')
        return cls.from_data(raw)


@dataclass(frozen=True)
class Analysis:
    c: float
    c_max: object
    run: object
    steady: object


@dataclass(frozen=True)
class Synthesis:
    analysis: Analysis
    certificate: object
    limit: object
    backward: tuple
    lf: object
    stabilizing: object


@dataclass(frozen=True)
class Comparison:
    synthesis: Synthesis
    report: object


class PipelineService:
    """Cached pipeline stages; each stage reuses the cached stage before it."""

    @staticmethod
    @lru_cache(maxsize=16)
    def analysis(scenario):
        model = scenario.model
        c_max = None
        c = scenario.c
        if scenario.auto_c:
            options = scenario.c_max_options
            c_max = estimate_c_max(model, options.get('bracket'), options.get('probes'),
                                   criterion=options.get('criterion'))
            c = c_max.c_max
        run = run_forward(model, None, c, scenario.T)
        steady = steady_state(model, c)
        logger.info("analysis %s: c=%.6g theta=%.6g", scenario.digest[:12], c, steady.theta)
        return Analysis(c=c, c_max=c_max, run=run, steady=steady)

    @staticmethod
    @lru_cache(maxsize=16)
    def synthesis(scenario, force=False):
        analysis = PipelineService.analysis(scenario)
        ss = analysis.steady
        certificate = certify(ss, scenario.rho_grid)
        limit = steady_backward(ss, certificate=certificate, force=force)
        backward = tuple(backward_recursion(scenario.model, analysis.run.steps))
        lf = assemble(scenario.model, ss, limit.X)
        stabilizing = stabilizing_check(limit.X, ss.Abar, ss.Bbar)
        return Synthesis(analysis=analysis, certificate=certificate, limit=limit, backward=backward,
                         lf=lf, stabilizing=stabilizing)

    @staticmethod
    @lru_cache(maxsize=16)
    def comparison(scenario, force=False):
        synthesis = PipelineService.synthesis(scenario, force)
        report = compare_synthesized(scenario.model, synthesis.lf, synthesis.analysis.c, scenario.T,
                                     mc=scenario.mc)
        return Comparison(synthesis=synthesis, report=report)

    @staticmethod
    @lru_cache(maxsize=16)
    def certificate_sweep(scenario):
        ss = PipelineService.analysis(scenario).steady
        return certificate_sweep(ss.Abar, ss.Bbar, ss.theta, scenario.rho_grid)

    @staticmethod
    def cache_clear():
        for stage in (PipelineService.analysis, PipelineService.synthesis,
                      PipelineService.comparison, PipelineService.certificate_sweep):
            stage.cache_clear()
