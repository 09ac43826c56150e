import csv
import json

import pytest

from core.estimate_verifier import make_record
from core.harmonic_one_form import HarmonicOneFormBuilder
from core.metric_field import MetricField
from reporting.report_writer import ReportWriter, canonical_json, sha256_of_json


@pytest.fixture
def writer(tmp_path, ledger):
    return ReportWriter(tmp_path / 'out', ledger, {'command': 'test', 'settings': {'grid': {'n_per_axis': '16'}}})


def _read_csv(path):
    with open(path) as handle:
        lines = [line for line in handle if not line.startswith('#')]
    return list(csv.DictReader(lines))


def test_canonical_json_is_key_sorted_and_strict():
    assert canonical_json({'b': 1, 'a': float('inf')}) == '{"a":"inf","b":1}'


def test_hash_ignores_timing():
    first = {'command': 'verify', 'exit_code': 0, 'timing': {'wall': 1.0}}
    second = {'command': 'verify', 'exit_code': 0, 'timing': {'wall': 2.5}}
    assert sha256_of_json(first) == sha256_of_json(second)
    assert sha256_of_json(first) != sha256_of_json(dict(first, exit_code=1))


def test_ledger_json(writer, ledger):
    path = writer.write_ledger('json', deltas=[0.0])
    document = json.loads(path.read_text())
    assert document['ledger_version_hash'] == ledger.version_hash()
    assert document['config']['command'] == 'test'
    names = {row['name'] for row in document['rows']}
    assert {'C_flat_injectivity', 'C_nonflat_injectivity', 'epsilon_one_form'} <= names
    unhashed = {k: v for k, v in document.items() if k != 'artifact_sha256'}
    assert document['artifact_sha256'] == sha256_of_json(unhashed)


def test_ledger_csv_and_markdown(writer):
    rows = _read_csv(writer.write_ledger('csv', deltas=[1e-15]))
    cube = next(row for row in rows if row['name'] == 'C_Sobolev_cube')
    assert cube['discrepancy_flag'] == 'False'
    holder = next(row for row in rows if row['name'] == 'C_Holder_Q_Qtilde')
    assert holder['discrepancy_flag'] == 'True'
    markdown = writer.write_ledger('md', deltas=[0.0]).read_text()
    assert markdown.startswith('# Constant ledger')
    assert 'DISCREPANCY' in markdown
    with pytest.raises(ValueError):
        writer.write_ledger('xml')


def test_ledger_artifacts_are_deterministic(tmp_path, ledger):
    texts = []
    for name in ('a', 'b'):
        writer = ReportWriter(tmp_path / name, ledger, {'command': 'ledger'})
        texts.append(writer.write_ledger('json', deltas=[0.0, 1e-15]).read_text())
    assert texts[0] == texts[1]


def test_records_and_summary(writer):
    records = [
        make_record('schauder', 'constant', 1.0, 2.0, 16, 0),
        make_record('schauder', 'mode', 1.0, 4.0, 16, 0),
        make_record('formal', 'mode', 3.0, 1.0, 16, 0, gating=False),
    ]
    summary = writer.write_records('schauder', records)
    assert summary['all_pass'] and summary['n_gating'] == 2
    lines = (writer.output_dir / 'schauder.jsonl').read_text().splitlines()
    assert json.loads(lines[0])['suite'] == 'schauder'
    assert json.loads(lines[1])['pass'] is True
    assert len(lines) == 4
    rows = _read_csv(writer.output_dir / 'schauder_summary.csv')
    assert [row['inequality_id'] for row in rows] == ['formal', 'schauder']

    path = writer.write_summary('verify', {'schauder': summary}, {'wall': 1.0}, 0)
    document = json.loads(path.read_text())
    assert document['exit_code'] == 0
    assert document['suites']['schauder']['n_records'] == 3


def test_certificates(writer, ledger, grid):
    certificate = HarmonicOneFormBuilder(ledger=ledger).certify(MetricField.flat(grid))
    document = json.loads(writer.write_one_form_certificate(certificate).read_text())
    assert document['certificate']['passed'] is True
    assert document['certificate']['periods'] == [1.0, 0.0, 0.0]

    delta = ledger.max_admissible_delta('absorption')
    document = json.loads(writer.write_delta_certificate(delta).read_text())
    assert document['delta_certificate']['certified'] is True
    assert document['delta_certificate']['delta_below'] < document['delta_certificate']['delta_above']


def test_freeze_golden(tmp_path, writer, ledger):
    path = writer.freeze_golden(tmp_path / 'golden' / 'ledger.json')
    document = json.loads(path.read_text())
    assert document['precision_bits'] == ledger.precision_bits
    assert document['nodes'] == ledger.golden_references(document['reference_digits'])
    assert document['nodes']['C_Poincare_Qtilde'].startswith('1.86105147269820005')
    assert document['nodes']['C_Sobolev_cube'] == '13.25'
