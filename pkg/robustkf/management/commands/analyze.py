from ...service import PipelineService
from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Run the forward robust recursion and write its trajectory and steady state."

    def run(self, scenario, writer, force=False):
        self.write_analysis(writer, PipelineService.analysis(scenario))
