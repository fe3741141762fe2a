from ...service import PipelineService
from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Compare Kalman and robust prediction error under the least favorable model."
    accepts_force = True

    def run(self, scenario, writer, force=False):
        comparison = PipelineService.comparison(scenario, force)
        self.write_analysis(writer, comparison.synthesis.analysis)
        self.write_synthesis(writer, comparison.synthesis)
        writer.compare(comparison.report)
        writer.gap(comparison.report)
