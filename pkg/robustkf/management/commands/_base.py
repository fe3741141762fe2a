import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ...conf import robustkf_setting
from ...exceptions import InputError, NumericalError
from ...service import Scenario
from ...writers import ResultWriter


logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


class ScenarioCommand(BaseCommand):
    """Shared front-end: load the scenario, run one pipeline stage, write its files.

    Input errors leave with exit status 2 and numerical failures with 3.
    """
    accepts_force = False

    def add_arguments(self, parser):
        parser.add_argument('--scenario', required=True, help="Path to the scenario JSON file")
        parser.add_argument('--out', help="Output directory (default: scenario 'outputs' or ROBUSTKF OUTPUT_DIR)")
        if self.accepts_force:
            parser.add_argument('--force', action='store_true',
                                help="Continue past a failed convergence certificate")

    def handle(self, *args, **options):
        try:
            scenario = Scenario.load(options['scenario'])
            writer = ResultWriter(self.output_dir(options, scenario), scenario)
            self.run(scenario, writer, force=options.get('force', False))
        except InputError as exc:
            raise CommandError(str(exc), returncode=EXIT_INPUT_ERROR) from exc
        except NumericalError as exc:
            raise CommandError(str(exc), returncode=EXIT_NUMERICAL_ERROR) from exc

        for path in writer.written:
            self.stdout.write(f"  {path}")
        self.stdout.write(self.style.SUCCESS(f"{len(writer.written)} files written to {writer.out_dir}"))

    @staticmethod
    def output_dir(options, scenario):
        if options.get('out'):
            return Path(options['out'])
        if scenario.outputs:
            return Path(scenario.outputs)
        return Path(robustkf_setting('OUTPUT_DIR'))

    def run(self, scenario, writer, force=False):
        raise NotImplementedError

    @staticmethod
    def write_analysis(writer, analysis):
        if analysis.c_max is not None:
            writer.c_max(analysis.c_max)
        writer.forward_trajectory(analysis.run)
        writer.steady_state(analysis.steady)

    @staticmethod
    def write_synthesis(writer, synthesis):
        writer.backward_trajectory(synthesis.backward)
        writer.certificate(synthesis.certificate)
        writer.lf_model(synthesis.lf, synthesis.limit)
        writer.stabilizing(synthesis.stabilizing)
