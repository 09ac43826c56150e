"""
Report Writer Module
Writes ledger tables, verification records, certificates and run summaries as deterministic artifacts
"""

import csv
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from core.constant_ledger import ConstantLedger, DeltaCertificate
from core.estimate_verifier import VerificationRecord, summarize
from core.harmonic_one_form import OneFormCertificate

LEDGER_COLUMNS = ('name', 'symbol', 'lo', 'hi', 'delta', 'citation', 'paper_value_if_any', 'discrepancy_flag',
                  'annotation', 'error')
RECORD_COLUMNS = ('inequality_id', 'test_case_id', 'lhs', 'rhs_bound', 'ratio', 'pass', 'grid', 'seed', 'gating',
                  'note')
SUMMARY_COLUMNS = ('inequality_id', 'n_records', 'n_gating', 'n_failed', 'all_pass', 'max_ratio', 'median_ratio',
                   'min_ratio')
OUTPUT_FORMATS = ('json', 'csv', 'md')
UNHASHED_KEYS = ('timing',)
GOLDEN_DIGITS = 45


def _clean(value):
    """Replace non-finite floats so artifacts stay strict JSON"""
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def canonical_json(obj: Dict, indent: Optional[int] = None) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=indent, separators=(',', ':') if indent is None else None,
                      ensure_ascii=True)


def sha256_of_json(obj: Dict) -> str:
    """Hash of the canonical encoding with the timing block removed"""
    hashed = {k: v for k, v in obj.items() if k not in UNHASHED_KEYS}
    return hashlib.sha256(canonical_json(hashed).encode('utf-8')).hexdigest()


def delta_certificate_to_dict(certificate: DeltaCertificate) -> Dict:
    return {
        'criterion': certificate.criterion,
        'delta_star': certificate.delta_star,
        'delta_below': certificate.delta_below,
        'delta_above': certificate.delta_above,
        'holds_below': certificate.holds_below,
        'fails_above': certificate.fails_above,
        'certified': certificate.certified,
        'value_below': list(certificate.value_below.endpoint_strings(20)),
        'value_above': (list(certificate.value_above.endpoint_strings(20))
                        if certificate.value_above is not None else None),
        'reason_above': certificate.reason_above,
        'bisection_steps': certificate.bisection_steps,
    }


class ReportWriter:
    """Writes artifacts under one output directory; every artifact carries the config and ledger hash"""

    def __init__(self, output_dir: Union[str, Path], ledger: ConstantLedger, config: Optional[Dict] = None):
        self.logger = logging.getLogger(__name__)
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.ledger = ledger
        self.config = config or {}
        self.ledger_hash = ledger.version_hash()
        self.written: List[Path] = []
        self.logger.info(f"ReportWriter initialized ({self.output_dir})")

    def _envelope(self) -> Dict:
        return {'config': self.config, 'ledger_version_hash': self.ledger_hash}

    def _write_text(self, name: str, text: str) -> Path:
        path = self.output_dir / name
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        self.written.append(path)
        self.logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name: str, payload: Dict) -> Path:
        document = dict(self._envelope(), **payload)
        document['artifact_sha256'] = sha256_of_json(document)
        return self._write_text(name, canonical_json(document, indent=2) + '\n')

    def _write_csv(self, name: str, columns: Iterable[str], rows: List[Dict]) -> Path:
        path = self.output_dir / name
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(f"# ledger_version_hash={self.ledger_hash}\n")
            handle.write(f"# config={canonical_json(self.config)}\n")
            writer = csv.DictWriter(handle, fieldnames=list(columns), extrasaction='ignore', restval='',
                                    lineterminator='\n')
            writer.writeheader()
            writer.writerows(rows)
        self.written.append(path)
        return path

    # ------------------------------------------------------------------
    # ledger
    # ------------------------------------------------------------------
    def write_ledger(self, output_format: str = 'json', deltas: Optional[List[float]] = None) -> Path:
        """
        Write the constant table

        Args:
            output_format: json, csv or md
            deltas: delta values for the delta-parametric rows
        """
        if output_format not in OUTPUT_FORMATS:
            raise ValueError(f"unknown output format {output_format}; choose from {OUTPUT_FORMATS}")
        rows = self.ledger.table_rows(deltas)
        if output_format == 'json':
            return self.write_json('ledger.json', {'rows': rows})
        if output_format == 'csv':
            return self._write_csv('ledger.csv', LEDGER_COLUMNS, rows)
        return self._write_text('ledger.md', self._ledger_markdown(rows))

    def _ledger_markdown(self, rows: List[Dict]) -> str:
        lines = [
            '# Constant ledger',
            '',
            f"Ledger version hash: `{self.ledger_hash}`",
            '',
            '| name | symbol | delta | lo | hi | paper value | flag | citation |',
            '|---|---|---|---|---|---|---|---|',
        ]
        for row in rows:
            hi = row['hi'] or row['error']
            flag = 'DISCREPANCY' if row['discrepancy_flag'] else ''
            lines.append(f"| {row['name']} | {row['symbol']} | {row['delta']} | {row['lo']} | {hi} | "
                         f"{row['paper_value_if_any']} | {flag} | {row['citation']} |")
        return '\n'.join(lines) + '\n'

    def freeze_golden(self, path: Union[str, Path]) -> Path:
        """Write the reference values used by the golden regression test"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        document = {
            'precision_bits': self.ledger.precision_bits,
            'reference_digits': GOLDEN_DIGITS,
            'nodes': self.ledger.golden_references(GOLDEN_DIGITS),
        }
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(canonical_json(document, indent=2) + '\n')
        self.logger.info(f"Golden ledger frozen to {path}")
        return path

    # ------------------------------------------------------------------
    # verification
    # ------------------------------------------------------------------
    def write_records(self, suite: str, records: List[VerificationRecord]) -> Dict:
        """<suite>.jsonl plus <suite>_summary.csv grouped by inequality"""
        header = dict(self._envelope(), suite=suite)
        lines = [canonical_json(header)] + [canonical_json(r.to_dict()) for r in records]
        self._write_text(f"{suite}.jsonl", '\n'.join(lines) + '\n')

        grouped: Dict[str, List[VerificationRecord]] = {}
        for record in records:
            grouped.setdefault(record.inequality_id, []).append(record)
        rows = [dict(summarize(group), inequality_id=name) for name, group in sorted(grouped.items())]
        self._write_csv(f"{suite}_summary.csv", SUMMARY_COLUMNS, rows)
        return summarize(records)

    def write_summary(self, command: str, suites: Dict[str, Dict], timing: Optional[Dict] = None,
                      exit_code: int = 0) -> Path:
        return self.write_json('summary.json', {
            'command': command,
            'suites': suites,
            'exit_code': exit_code,
            'timing': timing or {},
        })

    # ------------------------------------------------------------------
    # certificates
    # ------------------------------------------------------------------
    def write_one_form_certificate(self, certificate: OneFormCertificate) -> Path:
        return self.write_json('one_form_certificate.json', {'certificate': certificate.to_dict()})

    def write_delta_certificate(self, certificate: DeltaCertificate) -> Path:
        return self.write_json(f"delta_star_{certificate.criterion}.json",
                               {'delta_certificate': delta_certificate_to_dict(certificate)})
