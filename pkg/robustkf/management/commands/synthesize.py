from ...service import PipelineService
from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Synthesize the least favorable model; also writes the analysis files."
    accepts_force = True

    def run(self, scenario, writer, force=False):
        synthesis = PipelineService.synthesis(scenario, force)
        self.write_analysis(writer, synthesis.analysis)
        self.write_synthesis(writer, synthesis)
