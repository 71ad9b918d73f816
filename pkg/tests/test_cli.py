#
# Copyright (c) 2022 Amigos Development, Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

import json

import pandas as pd
import pytest

from blurgp.cli import run
from blurgp.model_file import ModelFile
from blurgp.version import __version__

def run_json(capsys, argv):
  rc = run(argv)
  out = capsys.readouterr().out
  return rc, (json.loads(out) if rc == 0 and out.strip() != '' else None)

@pytest.fixture
def circle_model(tmp_path, capsys) -> str:
  path = str(tmp_path / 'circle.yaml')
  rc, _ = run_json(capsys, [ 'train', '--generate', 'circle', '-m', '4', '--noise', '0.01', '--out', path ])
  assert rc == 0
  return path

@pytest.fixture
def gaussian_model(tmp_path, capsys) -> str:
  path = str(tmp_path / 'gaussian.yaml')
  rc, _ = run_json(capsys, [ 'train', '--generate', 'gaussian', '-m', '6', '--blur', 'sphere', '--out', path ])
  assert rc == 0
  return path

class TestBasics:
  def test_version(self, capsys):
    rc, value = run_json(capsys, [ 'version' ])
    assert rc == 0
    assert value == __version__

  def test_no_command(self, capsys):
    assert run([]) == 1

  def test_bad_flag(self, capsys):
    assert run([ 'train', '--no-such-flag' ]) == 1

class TestTrain:
  def test_circle(self, tmp_path, capsys):
    path = str(tmp_path / 'model.yaml')
    rc, result = run_json(capsys, [ 'train', '--generate', 'circle', '-m', '4', '--out', path ])
    assert rc == 0
    assert result['task'] == 'regression'
    assert result['blur_mode'] == 'full'
    assert result['report']['num_basis'] == 4
    assert result['report']['converged']

  def test_reruns_are_byte_identical(self, tmp_path, capsys):
    texts = []
    for name in ('a.yaml', 'b.yaml'):
      path = tmp_path / name
      assert run([ 'train', '--generate', 'gaussian', '-m', '5', '--seed', '3', '--out', str(path) ]) == 0
      texts.append(path.read_text())
    assert texts[0] == texts[1]

  def test_too_many_basis_points(self, tmp_path, capsys):
    argv = [ 'train', '--generate', 'circle', '--n-train', '10', '-m', '11', '--out', str(tmp_path / 'm.yaml') ]
    assert run(argv) == 1

  def test_standardize_needs_csv_data(self, tmp_path, capsys):
    argv = [ 'train', '--generate', 'gaussian', '-m', '3', '--standardize', '--out', str(tmp_path / 'm.yaml') ]
    assert run(argv) == 1
    assert '--standardize' in capsys.readouterr().err
    assert not (tmp_path / 'm.yaml').exists()

  def test_needs_one_data_source(self, tmp_path, capsys):
    assert run([ 'train', '-m', '2', '--out', str(tmp_path / 'm.yaml') ]) == 1

  def test_bad_csv_is_a_data_error(self, tmp_path, capsys):
    data = tmp_path / 'bad.csv'
    data.write_text("1,2,1\n3,x,0\n")
    argv = [ 'train', '--data', str(data), '--task', 'classification', '-m', '1', '--out', str(tmp_path / 'm.yaml') ]
    assert run(argv) == 2
    assert 'line 2' in capsys.readouterr().err

  def test_csv_round_trip(self, tmp_path, capsys):
    data = tmp_path / 'train.csv'
    rows = [ f"{x:.3f},{x * x:.3f},{1 if x > 0 else 0}" for x in [ -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0 ] ]
    data.write_text("a,b,label\n" + "\n".join(rows) + "\n")
    model = str(tmp_path / 'm.yaml')
    assert run([ 'train', '--data', str(data), '--task', 'classification', '-m', '3', '--standardize', '--out', model ]) == 0
    capsys.readouterr()
    rc, metrics = run_json(capsys, [
        'eval', '--model', model, '--data', str(data), '--task', 'classification',
        '--reference', 'full-gp', '--reference-data', str(data), '--format', 'json',
      ])
    assert rc == 0
    assert metrics['num_points'] == 8
    assert metrics['kl_to_reference'] >= 0.0

class TestEval:
  def test_gaussian_with_full_gp_reference(self, gaussian_model, tmp_path, capsys):
    metrics_path = tmp_path / 'metrics.json'
    rc, metrics = run_json(capsys, [
        'eval', '--model', gaussian_model, '--generate', 'gaussian', '--n-test', '500',
        '--reference', 'full-gp', '--metrics-out', str(metrics_path), '--format', 'json',
      ])
    assert rc == 0
    assert 0.0 <= metrics['error_rate'] < 0.5
    assert metrics['majority_error_rate'] == pytest.approx(0.5)
    assert metrics['kl_to_reference'] > 0.0
    assert 'reference_error_rate' in metrics
    assert json.loads(metrics_path.read_text()) == metrics

  def test_self_reference_has_zero_kl(self, circle_model, capsys):
    rc, metrics = run_json(capsys, [
        'eval', '--model', circle_model, '--generate', 'circle', '--reference', circle_model, '--format', 'json',
      ])
    assert rc == 0
    assert metrics['kl_to_reference'] == 0.0
    assert metrics['rmse'] == pytest.approx(metrics['reference_rmse'])

  def test_table_output(self, circle_model, capsys):
    assert run([ 'eval', '--model', circle_model, '--generate', 'circle' ]) == 0
    out = capsys.readouterr().out
    assert 'rmse' in out
    assert 'num_basis' in out

  def test_task_mismatch(self, circle_model, capsys):
    assert run([ 'eval', '--model', circle_model, '--generate', 'gaussian' ]) == 1

  def test_missing_model(self, tmp_path, capsys):
    assert run([ 'eval', '--model', str(tmp_path / 'absent.yaml'), '--generate', 'circle' ]) == 2

class TestHeatmap:
  def test_grid_and_sidecar(self, gaussian_model, tmp_path, capsys):
    out = tmp_path / 'grid.csv'
    rc, result = run_json(capsys, [ 'heatmap', '--model', gaussian_model, '--out', str(out) ])
    assert rc == 0
    assert result['rows'] == 2500
    frame = pd.read_csv(out)
    assert list(frame.columns) == [ 'x1', 'x2', 'value' ]
    assert len(frame) == 2500
    assert frame['value'].between(0.0, 1.0).all()
    sidecar = json.loads((tmp_path / 'grid.csv.basis.json').read_text())
    assert sidecar['blur_mode'] == 'sphere'
    assert len(sidecar['basis']) == 6
    assert len(sidecar['basis'][0]['axes']) == 2

  def test_explicit_ranges(self, circle_model, tmp_path, capsys):
    out = tmp_path / 'grid.csv'
    sidecar = tmp_path / 'basis.json'
    argv = [ 'heatmap', '--model', circle_model, '--out', str(out), '--sidecar', str(sidecar),
             '--x1-range', '-1.5', '1.5', '--x2-range', '-1.5', '1.5', '--resolution', '10' ]
    rc, result = run_json(capsys, argv)
    assert rc == 0
    assert result['rows'] == 100
    assert json.loads(sidecar.read_text())['value'] == 'mean'

  def test_degenerate_bounds(self, circle_model, tmp_path, capsys):
    argv = [ 'heatmap', '--model', circle_model, '--out', str(tmp_path / 'g.csv'), '--x1-range', '1.0', '1.0' ]
    assert run(argv) == 1

class TestExperiment:
  def test_tiny_circle(self, capsys):
    rc, summary = run_json(capsys, [
        'experiment', '--kind', 'circle', '--num-seeds', '2', '--n-train', '30', '--resolution', '10', '--per-seed',
      ])
    assert rc == 0
    assert summary['task'] == 'regression'
    assert summary['eta'] == pytest.approx(0.3)
    assert summary['seeds'] == [ 0, 1 ]
    assert set(summary['means']) == { 'delta', 'sphere', 'full' }
    assert len(summary['orderings']) == 12
    assert len(summary['per_seed']) == 2

  def test_csv_needs_data(self, capsys):
    assert run([ 'experiment', '--kind', 'csv' ]) == 1

  def test_split_preset_needs_csv(self, capsys):
    assert run([ 'experiment', '--kind', 'circle', '--split-preset', 'ionosphere' ]) == 1

  def test_unknown_split_preset(self, capsys):
    assert run([ 'experiment', '--kind', 'csv', '--split-preset', 'nope' ]) == 1

def test_prior_model_heatmap_is_flat(gaussian_model, tmp_path, capsys):
  mf = ModelFile.load(gaussian_model)
  mf.alpha[:] = 0.0
  mf.beta[:] = 0.0
  prior_path = str(tmp_path / 'prior.yaml')
  mf.save(prior_path)
  out = tmp_path / 'prior.csv'
  assert run([ 'heatmap', '--model', prior_path, '--out', str(out), '--resolution', '5' ]) == 0
  assert pd.read_csv(out)['value'].sub(0.5).abs().max() < 1e-12
