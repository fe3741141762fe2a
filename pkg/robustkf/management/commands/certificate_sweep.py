from ...service import PipelineService
from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Tabulate the convergence certificate margin over the rho grid."

    def run(self, scenario, writer, force=False):
        writer.certificate_sweep(PipelineService.certificate_sweep(scenario))
