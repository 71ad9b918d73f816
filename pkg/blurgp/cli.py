# Copyright (c) 2022 Samuel J. McKelvie
#
# MIT License - See LICENSE file accompanying this package.
#

"""Command-line interface for this package"""

from typing import Optional, Sequence, List, TextIO, Tuple

import logging
from .logging import logger

import os
import sys
import json
import shutil
import argparse
import subprocess
import argcomplete # type: ignore[import]
import colorama # type: ignore[import]
from colorama import Fore, Style

import numpy as np
import pandas as pd

from .baseline import (
    Model,
    error_rate,
    fit_full,
    fit_sparse,
    kl_predictive,
    predictive_y,
    rmse,
  )
from .basis_selection import select_basis
from .constants import (
    CIRCLE_EXPERIMENT_N,
    DEFAULT_CONVERGENCE_TOL,
    DEFAULT_DAMPING,
    DEFAULT_EPSILON,
    DEFAULT_ETA,
    DEFAULT_EXPERIMENT_SEEDS,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_MAX_SWEEPS,
    DEFAULT_NOISE_VARIANCE,
    CSV_EXPERIMENT_SPLITS,
    CSV_SPLIT_PRESETS,
    GAUSSIAN_EXPERIMENT_SPLIT,
  )
from .dataset import (
    Dataset,
    Task,
    gen_circle_regression,
    gen_gaussian_classes,
    grid_inputs,
    load_csv,
    majority_class_error,
  )
from .ep import EpConfig
from .exceptions import BlurGpError, UsageError
from .experiments import EXPERIMENT_KINDS, ExperimentConfig, run_experiment
from .internal_types import Jsonable, JsonableDict
from .kernels import BlurMode, KernelParams
from .likelihoods import ClassificationLik, Likelihood, RegressionLik
from .model_file import ModelFile
from .util import normalize_jsonable
from .version import __version__ as pkg_version

def is_colorizable(stream: TextIO) -> bool:
  is_a_tty = hasattr(stream, 'isatty') and stream.isatty()
  return is_a_tty


class CmdExitError(RuntimeError):
  exit_code: int

  def __init__(self, exit_code: int, msg: Optional[str]=None):
    if msg is None:
      msg = f"Command exited with return code {exit_code}"
    super().__init__(msg)
    self.exit_code = exit_code

class ArgparseExitError(CmdExitError):
  pass

class NoExitArgumentParser(argparse.ArgumentParser):
  def exit(self, status=0, message=None):
    if message:
      self._print_message(message, sys.stderr)
    raise ArgparseExitError(status, message)

  def error(self, message):
    # bad usage maps to exit code 1, like UsageError
    self.print_usage(sys.stderr)
    self.exit(1, f"{self.prog}: error: {message}\n")


class CommandLineInterface:
  _argv: Optional[Sequence[str]]
  _parser: argparse.ArgumentParser
  _args: argparse.Namespace
  _cwd: str

  _raw_stdout: TextIO = sys.stdout
  _raw_stderr: TextIO = sys.stderr
  _raw: bool = False
  _compact: bool = False
  _output_file: Optional[str] = None
  _encoding: str = 'utf-8'

  _colorize_stdout: bool = False
  _colorize_stderr: bool = False

  def __init__(self, argv: Optional[Sequence[str]]=None):
    self._argv = argv

  def ocolor(self, codes: str) -> str:
    return codes if self._colorize_stdout else ""

  def ecolor(self, codes: str) -> str:
    return codes if self._colorize_stderr else ""

  @property
  def cwd(self) -> str:
    return self._cwd

  def abspath(self, path: str) -> str:
    return os.path.abspath(os.path.join(self.cwd, os.path.expanduser(path)))

  def pretty_print(
        self,
        value: Jsonable,
        compact: Optional[bool]=None,
        colorize: Optional[bool]=None,
        raw: Optional[bool]=None,
      ):

    if raw is None:
      raw = self._raw
    if raw:
      if isinstance(value, str):
        self._raw_stdout.write(value)
        return

    if compact is None:
      compact = self._compact
    if colorize is None:
      colorize = True

    def emit_to(f: TextIO):
      final_colorize = (
          colorize and
          ((f is sys.stdout and self._colorize_stdout) or (f is sys.stderr and self._colorize_stderr)) and
          shutil.which('jq') is not None
        )

      if not final_colorize:
        if compact:
          json.dump(value, f, separators=(',', ':'), sort_keys=True)
        else:
          json.dump(value, f, indent=2, sort_keys=True)
        f.write('\n')
      else:
        jq_input = json.dumps(value, separators=(',', ':'), sort_keys=True)
        cmd = [ 'jq' ]
        if compact:
          cmd.append('-c')
        cmd.append('.')
        f.flush()
        with subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=f) as proc:
          proc.communicate(input=jq_input.encode('utf-8'))
          exit_code = proc.returncode
        if exit_code != 0:
          raise subprocess.CalledProcessError(exit_code, cmd)

    output_file = self._output_file
    if output_file is None:
      emit_to(sys.stdout)
    else:
      with open(self.abspath(output_file), "w", encoding=self._encoding) as f:
        emit_to(f)

  def write_json_file(self, path: str, value: Jsonable) -> str:
    full_path = self.abspath(path)
    with open(full_path, "w", encoding=self._encoding) as f:
      json.dump(value, f, indent=2, sort_keys=True)
      f.write('\n')
    return full_path

  # ---------------------------------------------------------------------------- shared helpers

  def ep_config(self) -> EpConfig:
    args = self._args
    return EpConfig(
        max_sweeps=args.max_sweeps,
        convergence_tol=args.tol,
        damping=args.damping,
        jitter=args.jitter,
        site_order='shuffled' if args.shuffle_sites else 'natural',
        shuffle_seed=args.seed,
      )

  def likelihood_for(self, task: Task) -> Likelihood:
    args = self._args
    if task == Task.REGRESSION:
      return RegressionLik(args.noise)
    return ClassificationLik(args.eps)

  def load_dataset(self, split: str='train', standardize: bool=False) -> Dataset:
    """The dataset named by --data or --generate.

    Generated data is reproducible from --data-seed (default --seed); for the gaussian generator
    the train and test splits come from a single draw, so train and eval agree.
    """
    args = self._args
    if (args.data is None) == (args.generate is None):
      raise UsageError("Exactly one of --data or --generate is required")
    task: Optional[Task] = None if args.task is None else Task(args.task)
    seed = args.seed if args.data_seed is None else args.data_seed
    if args.generate == 'circle':
      if task not in (None, Task.REGRESSION):
        raise UsageError("The circle generator produces regression data")
      return gen_circle_regression(CIRCLE_EXPERIMENT_N if args.n_train is None else args.n_train, seed)
    if args.generate == 'gaussian':
      if task not in (None, Task.CLASSIFICATION):
        raise UsageError("The gaussian generator produces classification data")
      n_train = GAUSSIAN_EXPERIMENT_SPLIT[0] if args.n_train is None else args.n_train
      n_test = GAUSSIAN_EXPERIMENT_SPLIT[1] if args.n_test is None else args.n_test
      train, test = gen_gaussian_classes(n_train, n_test, seed)
      return train if split == 'train' else test
    if task is None:
      raise UsageError("--task is required with --data")
    return load_csv(
        self.abspath(args.data),
        task,
        delimiter=args.delimiter,
        label_column=args.label_column,
        positive_label=args.positive_label,
        standardize=standardize,
      )

  def load_model_file(self, path: str) -> ModelFile:
    model_file = ModelFile.load(self.abspath(path))
    logger.debug(f"Loaded model {path}: task={model_file.task.value}, M={model_file.basis.size}")
    return model_file

  # ---------------------------------------------------------------------------- commands

  def cmd_bare(self) -> int:
    print("A command is required", file=sys.stderr)
    return 1

  def cmd_version(self) -> int:
    self.pretty_print(pkg_version)
    return 0

  def cmd_train(self) -> int:
    args = self._args
    if args.standardize and args.generate is not None:
      raise UsageError("--standardize applies to --data only; generated data is used as drawn")
    data = self.load_dataset('train', standardize=args.standardize)
    if args.num_basis > data.size:
      raise UsageError(f"--num-basis {args.num_basis} exceeds the number of training points {data.size}")
    kernel = KernelParams(DEFAULT_ETA if args.eta is None else args.eta)
    lik = self.likelihood_for(data.task)
    cfg = self.ep_config()
    basis = select_basis(data.inputs, args.num_basis, BlurMode(args.blur), kernel, seed=args.seed)
    model = fit_sparse(data, basis, lik, cfg)
    model_file = ModelFile.from_fit(model, data)
    out_path = self.abspath(args.out)
    model_file.save(out_path)
    assert model.report is not None
    result: JsonableDict = dict(
        model_file=out_path,
        task=data.task.value,
        blur_mode=BlurMode(args.blur).value,
        report=model.report.to_jsonable(),
      )
    self.pretty_print(normalize_jsonable(result))
    return 0

  def _reference_training_data(self, model_file: ModelFile) -> Dataset:
    args = self._args
    if args.reference_data is not None:
      if args.task is None:
        raise UsageError("--task is required with --reference-data")
      train = load_csv(
          self.abspath(args.reference_data),
          Task(args.task),
          delimiter=args.delimiter,
          label_column=args.label_column,
          positive_label=args.positive_label,
        )
    elif args.generate is not None:
      train = self.load_dataset('train')
    else:
      raise UsageError("--reference full-gp needs training data: give --reference-data or use --generate")
    return Dataset(model_file.prepare_inputs(train.inputs), train.outputs, train.task)

  def cmd_eval(self) -> int:
    args = self._args
    model_file = self.load_model_file(args.model)
    data = self.load_dataset(args.split)
    if data.task != model_file.task:
      raise UsageError(f"Model task {model_file.task.value!r} does not match data task {data.task.value!r}")
    test = Dataset(model_file.prepare_inputs(data.inputs), data.outputs, data.task)
    model = model_file.to_model()
    metrics: JsonableDict = dict(
        model_file=self.abspath(args.model),
        task=test.task.value,
        num_points=test.size,
        num_basis=model_file.basis.size,
        blur_mode=None if model_file.basis.blur_mode is None else model_file.basis.blur_mode.value,
      )
    if test.task == Task.CLASSIFICATION:
      metrics['error_rate'] = error_rate(model, test)
      metrics['majority_error_rate'] = majority_class_error(test)
    else:
      metrics['rmse'] = rmse(model, test)

    if args.reference is not None:
      reference: Model
      if args.reference == 'full-gp':
        reference = fit_full(self._reference_training_data(model_file), model_file.kernel, model_file.likelihood, self.ep_config())
        ref_inputs = test.inputs
        metrics['reference'] = 'full-gp'
      else:
        ref_file = self.load_model_file(args.reference)
        if ref_file.task != model_file.task:
          raise UsageError(f"Reference task {ref_file.task.value!r} does not match model task {model_file.task.value!r}")
        reference = ref_file.to_model()
        ref_inputs = ref_file.prepare_inputs(data.inputs)
        metrics['reference'] = self.abspath(args.reference)
      metrics['kl_to_reference'] = kl_predictive(reference, model, ref_inputs, approx_xs=test.inputs)
      ref_test = Dataset(ref_inputs, test.outputs, test.task)
      if test.task == Task.CLASSIFICATION:
        metrics['reference_error_rate'] = error_rate(reference, ref_test)
      else:
        metrics['reference_rmse'] = rmse(reference, ref_test)

    metrics = normalize_jsonable(metrics)
    if args.metrics_out is not None:
      self.write_json_file(args.metrics_out, metrics)
    if args.format == 'json':
      self.pretty_print(metrics)
    else:
      width = max(len(k) for k in metrics)
      for k in sorted(metrics):
        v = metrics[k]
        text = f"{v:.6g}" if isinstance(v, float) else str(v)
        print(f"{self.ocolor(Style.BRIGHT)}{k:<{width}}{self.ocolor(Style.RESET_ALL)}  {text}")
    return 0

  def _default_range(self, model_file: ModelFile, axis: int) -> Tuple[float, float]:
    """Extent of the basis centers padded by 3 length scales, in original input units."""
    centers = model_file.basis.centers[:, axis]
    pad = 3.0 * model_file.kernel.eta
    lo, hi = float(np.min(centers)) - pad, float(np.max(centers)) + pad
    if model_file.standardizer is not None:
      scale = float(model_file.standardizer.scale[axis])
      shift = float(model_file.standardizer.mean[axis])
      lo, hi = lo * scale + shift, hi * scale + shift
    return lo, hi

  def cmd_heatmap(self) -> int:
    args = self._args
    model_file = self.load_model_file(args.model)
    if model_file.dim != 2:
      raise UsageError(f"Heatmaps need a model with 2-D inputs, this one has d={model_file.dim}")
    x1_range = self._default_range(model_file, 0) if args.x1_range is None else tuple(args.x1_range)
    x2_range = self._default_range(model_file, 1) if args.x2_range is None else tuple(args.x2_range)
    grid = grid_inputs(x1_range, x2_range, args.resolution)
    model = model_file.to_model()
    xs = model_file.prepare_inputs(grid)
    if model_file.task == Task.CLASSIFICATION:
      values = predictive_y(model, xs)
      value_name = 'probability'
    else:
      values, _ = model.predict_latent(xs)
      value_name = 'mean'
    out_path = self.abspath(args.out)
    pd.DataFrame({ 'x1': grid[:, 0], 'x2': grid[:, 1], 'value': values }).to_csv(out_path, index=False)

    ellipses: List[JsonableDict] = []
    for point in model_file.basis:
      evals, evecs = point.ellipse()
      ellipses.append(dict(
          center=point.center,
          local_cov=point.local_cov,
          eigenvalues=evals,
          eigenvectors=evecs.T,
          axes=np.sqrt(evals),
        ))
    sidecar: JsonableDict = dict(
        task=model_file.task.value,
        value=value_name,
        eta=model_file.kernel.eta,
        blur_mode=None if model_file.basis.blur_mode is None else model_file.basis.blur_mode.value,
        standardized=model_file.standardizer is not None,
        x1_range=list(x1_range),
        x2_range=list(x2_range),
        resolution=args.resolution,
        basis=ellipses,
      )
    sidecar_path = self.write_json_file(args.sidecar or f"{args.out}.basis.json", normalize_jsonable(sidecar))
    self.pretty_print(dict(grid_file=out_path, sidecar_file=sidecar_path, rows=int(grid.shape[0])))
    return 0

  def cmd_experiment(self) -> int:
    args = self._args
    data: Optional[Dataset] = None
    if args.kind == 'csv':
      if args.data is None:
        raise UsageError("The csv experiment needs --data")
      data = load_csv(
          self.abspath(args.data),
          Task.CLASSIFICATION,
          delimiter=args.delimiter,
          label_column=args.label_column,
          positive_label=args.positive_label,
        )
    num_seeds = args.num_seeds
    if num_seeds is None:
      num_seeds = CSV_EXPERIMENT_SPLITS if args.kind == 'csv' else DEFAULT_EXPERIMENT_SEEDS
    cfg = ExperimentConfig(
        kind=args.kind,
        seeds=list(range(args.seed, args.seed + num_seeds)),
        num_basis=args.num_basis,
        modes=[ BlurMode(m) for m in args.modes ],
        eta=args.eta,
        epsilon=args.eps,
        noise=args.noise,
        n_train=args.n_train,
        n_test=args.n_test,
        grid_resolution=args.resolution,
        data=data,
        split_preset=args.split_preset,
        standardize=args.standardize,
        ep=EpConfig(max_sweeps=args.max_sweeps, convergence_tol=args.tol, damping=args.damping, jitter=args.jitter),
        jobs=args.jobs,
      )
    summary = run_experiment(cfg)
    if not args.per_seed:
      del summary['per_seed']
    self.pretty_print(normalize_jsonable(summary))
    return 0

  # ---------------------------------------------------------------------------- argument parsing

  @staticmethod
  def _add_data_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--data', default=None,
                        help='Delimited text file of numeric features plus one label column')
    parser.add_argument('--generate', choices=[ 'circle', 'gaussian' ], default=None,
                        help='Use a synthetic dataset instead of --data')
    parser.add_argument('--task', choices=[ t.value for t in Task ], default=None,
                        help='Task of the data. Required with --data; implied by --generate')
    parser.add_argument('--n-train', type=int, default=None,
                        help='Generated training set size. Default is 100 (circle) or 200 (gaussian)')
    parser.add_argument('--n-test', type=int, default=None,
                        help='Generated test set size (gaussian). Default is 2000')
    parser.add_argument('--data-seed', type=int, default=None,
                        help='Seed for the data generator. Default is --seed')
    parser.add_argument('--delimiter', default=',',
                        help='Field delimiter of --data. Default is ","')
    parser.add_argument('--label-column', type=int, default=-1,
                        help='Index of the label column; negative counts from the end. Default is -1')
    parser.add_argument('--positive-label', default=None,
                        help='Label value mapped to +1 for classification. Inferred for 0/1 and -1/+1 labels')

  @staticmethod
  def _add_fit_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--eta', type=float, default=None,
                        help=f'Kernel length scale. Default is {DEFAULT_ETA} for train; experiments pick one per kind')
    parser.add_argument('--noise', type=float, default=DEFAULT_NOISE_VARIANCE,
                        help=f'Observation noise variance for regression. Default is {DEFAULT_NOISE_VARIANCE}')
    parser.add_argument('--eps', type=float, default=DEFAULT_EPSILON,
                        help=f'Labeling error probability for classification. Default is {DEFAULT_EPSILON}')
    parser.add_argument('--tol', type=float, default=DEFAULT_CONVERGENCE_TOL,
                        help=f'EP convergence tolerance on message changes. Default is {DEFAULT_CONVERGENCE_TOL}')
    parser.add_argument('--max-sweeps', type=int, default=DEFAULT_MAX_SWEEPS,
                        help=f'Maximum number of EP sweeps. Default is {DEFAULT_MAX_SWEEPS}')
    parser.add_argument('--damping', type=float, default=DEFAULT_DAMPING,
                        help=f'EP damping in (0, 1]. Default is {DEFAULT_DAMPING}')
    parser.add_argument('--jitter', type=float, default=None,
                        help='Initial absolute jitter for the blurred Gram matrix. Default is 1e-8 * trace / M')
    parser.add_argument('--seed', type=int, default=0,
                        help='Seed for K-means and generated data. Default is 0')

  def run(self) -> int:
    """Run the commandline tool with provided arguments

    Args:
        argv (Optional[Sequence[str]], optional):
            A list of commandline arguments (NOT including the program as argv[0]!),
            or None to use sys.argv[1:]. Defaults to None.

    Returns:
        int: The exit code that would be returned if this were run as a standalone command.
    """
    parser = NoExitArgumentParser(prog='blurgp', description="Sparse Gaussian processes with blurred basis points.")

    # ======================= Main command

    self._parser = parser
    parser.add_argument('--traceback', "--tb", action='store_true', default=False,
                        help='Display detailed exception information')
    parser.add_argument('--loglevel', default='warning',
                        choices=['critical', 'error', 'warning', 'info', 'debug'],
                        help='Set the logging level. Default is "warning"')
    parser.add_argument('-M', '--monochrome', action='store_true', default=False,
                        help='Output to stdout/stderr in monochrome. Default is to colorize if stream is a compatible terminal')
    parser.add_argument('-c', '--compact', action='store_true', default=False,
                        help='Compact instead of pretty-printed output')
    parser.add_argument('-r', '--raw', action='store_true', default=False,
                        help='''Output raw strings directly, not json-encoded.
                                Values embedded in structured results are not affected.''')
    parser.add_argument('-o', '--output', dest="output_file", default=None,
                        help='Write output value to the specified file instead of stdout')
    parser.add_argument('--text-encoding', default='utf-8',
                        help='The encoding used for text. Default  is utf-8')
    parser.add_argument('-C', '--cwd', default='.',
                        help="Change the effective directory used to resolve relative paths")
    parser.set_defaults(func=self.cmd_bare)

    subparsers = parser.add_subparsers(
                        title='Commands',
                        description='Valid commands',
                        help='Additional help available with "blurgp <command-name> -h"')

    # ======================= version

    parser_version = subparsers.add_parser('version',
                            description='''Display version information. JSON-quoted string. If a raw string is desired, use -r.''')
    parser_version.set_defaults(func=self.cmd_version)

    # ======================= train

    parser_train = subparsers.add_parser('train',
                            description='''Select a blurred basis by K-means, fit it with EP, write the model file
                                           and print the fit report.''')
    self._add_data_args(parser_train)
    self._add_fit_args(parser_train)
    parser_train.add_argument('-m', '--num-basis', type=int, required=True,
                        help='Number of basis points M')
    parser_train.add_argument('--blur', choices=[ b.value for b in BlurMode ], default=BlurMode.FULL.value,
                        help='How cluster covariances become local covariances. Default is "full"')
    parser_train.add_argument('--standardize', action='store_true', default=False,
                        help='Standardize features of --data to zero mean and unit variance')
    parser_train.add_argument('--shuffle-sites', action='store_true', default=False,
                        help='Visit EP sites in a seeded random order each sweep')
    parser_train.add_argument('--out', required=True,
                        help='Model file to write')
    parser_train.set_defaults(func=self.cmd_train)

    # ======================= eval

    parser_eval = subparsers.add_parser('eval',
                            description='''Evaluate a model file on test data: error rate or RMSE, and KL divergence
                                           to a reference model when one is given.''')
    self._add_data_args(parser_eval)
    self._add_fit_args(parser_eval)
    parser_eval.add_argument('--model', required=True,
                        help='Model file to evaluate')
    parser_eval.add_argument('--split', choices=[ 'train', 'test' ], default='test',
                        help='Which generated split to evaluate on. Default is "test"')
    parser_eval.add_argument('--reference', default=None,
                        help='"full-gp" to fit the full GP reference, or the path of a reference model file')
    parser_eval.add_argument('--reference-data', default=None,
                        help='Training data for the full GP reference when --data is used')
    parser_eval.add_argument('--metrics-out', default=None,
                        help='Also write the metrics as JSON to this file')
    parser_eval.add_argument('--format', choices=[ 'table', 'json' ], default='table',
                        help='Output format on stdout. Default is "table"')
    parser_eval.set_defaults(func=self.cmd_eval, shuffle_sites=False)

    # ======================= heatmap

    parser_heatmap = subparsers.add_parser('heatmap',
                            description='''Write a grid of the predictive mean (regression) or class probability
                                           (classification) as CSV, plus the basis ellipses as a JSON sidecar.''')
    parser_heatmap.add_argument('--model', required=True,
                        help='Model file with 2-D inputs')
    parser_heatmap.add_argument('--x1-range', type=float, nargs=2, metavar=('LO', 'HI'), default=None,
                        help='Grid bounds on the first input. Default is the basis extent padded by 3 eta')
    parser_heatmap.add_argument('--x2-range', type=float, nargs=2, metavar=('LO', 'HI'), default=None,
                        help='Grid bounds on the second input. Default is the basis extent padded by 3 eta')
    parser_heatmap.add_argument('--resolution', type=int, default=DEFAULT_GRID_RESOLUTION,
                        help=f'Grid points per axis. Default is {DEFAULT_GRID_RESOLUTION}')
    parser_heatmap.add_argument('--out', required=True,
                        help='CSV file to write with columns x1,x2,value')
    parser_heatmap.add_argument('--sidecar', default=None,
                        help='JSON file for basis centers and ellipses. Default is <out>.basis.json')
    parser_heatmap.set_defaults(func=self.cmd_heatmap)

    # ======================= experiment

    parser_experiment = subparsers.add_parser('experiment',
                            description='''Compare blur modes over repeated seeds on one shared basis per seed,
                                           against the full GP reference, with paired sign tests.''')
    self._add_fit_args(parser_experiment)
    parser_experiment.add_argument('--kind', choices=EXPERIMENT_KINDS, default='gaussian',
                        help='Experiment: synthetic classes, circle regression or splits of a CSV file. Default is "gaussian"')
    parser_experiment.add_argument('--num-seeds', type=int, default=None,
                        help='Number of consecutive seeds starting at --seed. Default is 20 (10 for csv)')
    parser_experiment.add_argument('-m', '--num-basis', type=int, default=None,
                        help='Number of basis points M. Default is 10 (gaussian), 4 (circle) or 50 (csv)')
    parser_experiment.add_argument('--modes', nargs='+', choices=[ b.value for b in BlurMode ],
                        default=[ b.value for b in BlurMode ],
                        help='Blur modes to compare. Default is all')
    parser_experiment.add_argument('--n-train', type=int, default=None,
                        help='Training set size. Defaults depend on the kind')
    parser_experiment.add_argument('--n-test', type=int, default=None,
                        help='Test set size. Defaults depend on the kind')
    parser_experiment.add_argument('--resolution', type=int, default=DEFAULT_GRID_RESOLUTION,
                        help=f'Evaluation grid points per axis for the circle experiment. Default is {DEFAULT_GRID_RESOLUTION}')
    parser_experiment.add_argument('--data', default=None,
                        help='Classification CSV file for the csv experiment')
    parser_experiment.add_argument('--delimiter', default=',',
                        help='Field delimiter of --data. Default is ","')
    parser_experiment.add_argument('--label-column', type=int, default=-1,
                        help='Index of the label column. Default is -1')
    parser_experiment.add_argument('--positive-label', default=None,
                        help='Label value mapped to +1')
    parser_experiment.add_argument('--split-preset', choices=sorted(CSV_SPLIT_PRESETS), default=None,
                        help='Train/test sizes of a known dataset for the csv experiment. Default is picked from the row count')
    parser_experiment.add_argument('--standardize', action='store_true', default=False,
                        help='Standardize features using each training split')
    parser_experiment.add_argument('-j', '--jobs', type=int, default=1,
                        help='Seeds fitted in parallel. Default is 1')
    parser_experiment.add_argument('--per-seed', action='store_true', default=False,
                        help='Include per-seed results in the output')
    parser_experiment.set_defaults(func=self.cmd_experiment)

    # =========================================================

    argcomplete.autocomplete(parser)
    try:
      args = parser.parse_args(self._argv)
    except ArgparseExitError as ex:
      return ex.exit_code
    logging.basicConfig(level=args.loglevel.upper())
    traceback: bool = args.traceback
    try:
      self._args = args
      self._raw_stdout = sys.stdout
      self._raw_stderr = sys.stderr
      self._raw = args.raw
      self._compact = args.compact
      self._output_file = args.output_file
      self._encoding = args.text_encoding
      monochrome: bool = args.monochrome
      if not monochrome:
        self._colorize_stdout = is_colorizable(sys.stdout)
        self._colorize_stderr = is_colorizable(sys.stderr)
        if self._colorize_stdout or self._colorize_stderr:
          colorama.init(wrap=False)
          if self._colorize_stdout:
            new_stream = colorama.AnsiToWin32(sys.stdout)
            if new_stream.should_wrap():
              sys.stdout = new_stream
          if self._colorize_stderr:
            new_stream = colorama.AnsiToWin32(sys.stderr)
            if new_stream.should_wrap():
              sys.stderr = new_stream
      self._cwd = os.path.abspath(os.path.expanduser(args.cwd))
      rc = args.func()
    except Exception as ex:
      if isinstance(ex, (CmdExitError, BlurGpError)):
        rc = ex.exit_code
      elif isinstance(ex, np.linalg.LinAlgError):
        rc = 3
      else:
        rc = 1
      if rc != 0:
        if traceback:
          raise

        print(f"{self.ecolor(Fore.RED)}blurgp: error: {ex}{self.ecolor(Style.RESET_ALL)}", file=sys.stderr)
    return rc

  @property
  def args(self) -> argparse.Namespace:
    return self._args

def run(argv: Optional[Sequence[str]]=None) -> int:
  try:
    rc = CommandLineInterface(argv).run()
  except CmdExitError as ex:
    rc = ex.exit_code
  return rc
