#!/usr/bin/env python3
"""
T3 Elliptic Constants
Main entry point: constant ledger export, verification suites, one-form certificates and delta* search
"""

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional

# Add src directory to path for imports
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from core.constant_ledger import CRITERIA, ConstantLedger
from core.errors import EstimateError
from core.estimate_verifier import SUITES, EstimateVerifier
from core.harmonic_one_form import HarmonicOneFormBuilder
from core.metric_field import FAMILY_KINDS, perturbation_family
from core.torus_field import GridSpec, write_raw_snapshot
from reporting.report_writer import OUTPUT_FORMATS, ReportWriter
from utils.config_manager import ConfigManager
from utils.performance_monitor import PerformanceMonitor

GOLDEN_PATH = os.path.join(os.path.dirname(__file__), 'tests', 'golden', 'ledger_golden.json')
DEFAULT_SUITES = ('flat-injectivity', 'schauder', 'auxiliary', 'cutoff', 'metric-lemmas', 'norm-comparison',
                  'laplacian-comparison', 'nonflat-injectivity')


def setup_logging(config_manager: ConfigManager):
    """Configure root logging once from the [logging] section"""
    handlers = [logging.StreamHandler(sys.stdout)]
    if config_manager.is_log_to_file_enabled():
        handlers.insert(0, logging.FileHandler(config_manager.get_log_file()))
    logging.basicConfig(
        level=getattr(logging, config_manager.get_log_level().upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default='config/settings.ini', help='ini configuration file')
    common.add_argument('--output-dir', help='artifact directory')
    common.add_argument('--format', choices=OUTPUT_FORMATS, help='ledger table format')
    common.add_argument('--inverse-bound', choices=('stated', 'derived'))
    common.add_argument('--christoffel-bound', choices=('paper', 'derived'))
    common.add_argument('--grid', type=int, help='grid points per axis (even, >= 4)')
    common.add_argument('--seed', type=int)
    common.add_argument('--n-cases', type=int)

    parser = argparse.ArgumentParser(description='Explicit elliptic-estimate constants on the 3-torus')
    commands = parser.add_subparsers(dest='command', required=True)

    ledger = commands.add_parser('ledger', parents=[common], help='export the constant table')
    ledger.add_argument('--freeze', action='store_true', help='write the golden reference table for regression tests')

    verify = commands.add_parser('verify', parents=[common], help='run verification suites')
    verify.add_argument('--suite', nargs='+', choices=SUITES, default=list(DEFAULT_SUITES))
    verify.add_argument('--delta', type=float, help='nominal metric perturbation size')
    verify.add_argument('--kind', choices=FAMILY_KINDS, default=None)

    one_form = commands.add_parser('one-form', parents=[common], help='certify the harmonic 1-form')
    one_form.add_argument('--delta', type=float, default=1e-15)
    one_form.add_argument('--kind', choices=FAMILY_KINDS, default=None)
    one_form.add_argument('--axis', type=int, choices=(1, 2, 3), default=1)
    one_form.add_argument('--dump-field', action='store_true', help='write omega as a raw binary snapshot')

    solve_delta = commands.add_parser('solve-delta', parents=[common], help='certify the largest admissible delta')
    solve_delta.add_argument('--criterion', nargs='+', choices=CRITERIA, default=list(CRITERIA))
    return parser


class EstimateLedgerApp:
    """Coordinates the ledger, verifier, one-form builder and report writer for one CLI run"""

    def __init__(self, args: argparse.Namespace, config_manager: Optional[ConfigManager] = None):
        self.logger = logging.getLogger(__name__)
        self.args = args
        self.config_manager = config_manager or ConfigManager(args.config)
        self.apply_overrides()

        self.ledger = ConstantLedger(self.config_manager)
        self.performance_monitor = PerformanceMonitor(self.config_manager)
        self.output_format = args.format or self.config_manager.get_output_format()
        self.writer = ReportWriter(self.config_manager.get_output_dir(), self.ledger, self.config_echo())
        self.logger.info("EstimateLedgerApp initialized")

    def apply_overrides(self):
        """Command-line flags override the ini file for this run only"""
        cm, args = self.config_manager, self.args
        if args.output_dir:
            cm.set_output_dir(args.output_dir)
        if args.inverse_bound:
            cm.set_inverse_bound(args.inverse_bound)
        if args.christoffel_bound:
            cm.set_christoffel_bound(args.christoffel_bound)
        if args.grid is not None:
            cm.set_grid_size(args.grid)
        if args.seed is not None:
            cm.set_seed(args.seed)
        if args.n_cases is not None:
            cm.set_n_cases(args.n_cases)
        if getattr(args, 'kind', None):
            cm.set_family_kind(args.kind)

    def config_echo(self) -> Dict:
        settings = self.config_manager.get_all_settings()
        settings.pop('output', None)
        settings.pop('logging', None)
        return {'command': self.args.command, 'settings': settings}

    def run(self) -> int:
        handlers = {
            'ledger': self.run_ledger,
            'verify': self.run_verify,
            'one-form': self.run_one_form,
            'solve-delta': self.run_solve_delta,
        }
        return handlers[self.args.command]()

    def run_ledger(self) -> int:
        with self.performance_monitor.track('ledger'):
            path = self.writer.write_ledger(self.output_format)
        if self.args.freeze:
            self.writer.freeze_golden(GOLDEN_PATH)
        self.logger.info(f"Ledger written to {path}")
        return 0

    def run_verify(self) -> int:
        verifier = EstimateVerifier(self.config_manager, self.ledger)
        grid = GridSpec(self.config_manager.get_grid_size())
        summaries = {}
        for suite in self.args.suite:
            with self.performance_monitor.track(suite):
                records = verifier.run_suite(suite, delta=self.args.delta, kind=self.config_manager.get_family_kind(),
                                             grid=grid, n_cases=self.config_manager.get_n_cases())
            summaries[suite] = self.writer.write_records(suite, records)
        exit_code = 0 if all(s['all_pass'] for s in summaries.values()) else 1
        self.writer.write_summary('verify', summaries, self.performance_monitor.get_performance_summary(), exit_code)
        for warning in self.performance_monitor.check_performance_warnings():
            self.logger.warning(warning)
        return exit_code

    def run_one_form(self) -> int:
        builder = HarmonicOneFormBuilder(self.config_manager, self.ledger)
        grid = GridSpec(self.config_manager.get_grid_size())
        seed = self.config_manager.get_seed()
        with self.performance_monitor.track('one-form'):
            g = perturbation_family(self.args.delta, self.config_manager.get_family_kind(), grid, seed)
            certificate = builder.certify(g, self.args.axis)
        self.writer.write_one_form_certificate(certificate)
        if self.args.dump_field:
            xi = builder.solve_xi(g, self.args.axis).xi
            omega = builder.build_one_form(g, xi, certificate.sign, self.args.axis)
            write_raw_snapshot(self.writer.output_dir / 'omega_field.bin', omega.components, grid, 'one_form', seed,
                               extra={'sign': certificate.sign, 'axis': self.args.axis, 'family_kind': g.kind,
                                      'delta_nominal': g.delta_nominal})
        exit_code = 0 if certificate.passed else 1
        self.writer.write_summary('one-form', {'one-form': {'all_pass': certificate.passed,
                                                            'regime': certificate.regime}},
                                  self.performance_monitor.get_performance_summary(), exit_code)
        return exit_code

    def run_solve_delta(self) -> int:
        results = {}
        for criterion in self.args.criterion:
            with self.performance_monitor.track(f"solve-delta:{criterion}"):
                certificate = self.ledger.max_admissible_delta(criterion)
            self.writer.write_delta_certificate(certificate)
            results[criterion] = {'all_pass': certificate.certified, 'delta_star': certificate.delta_star}
        exit_code = 0 if all(r['all_pass'] for r in results.values()) else 1
        self.writer.write_summary('solve-delta', results, self.performance_monitor.get_performance_summary(),
                                  exit_code)
        return exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config_manager = ConfigManager(args.config)
        setup_logging(config_manager)
        return EstimateLedgerApp(args, config_manager).run()
    except EstimateError as e:
        logging.getLogger(__name__).error(f"Run aborted: {e}")
        sys.stderr.write(json.dumps({'error': type(e).__name__, 'message': str(e)}) + '\n')
        return 2


if __name__ == "__main__":
    sys.exit(main())
