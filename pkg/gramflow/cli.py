"""
gramflow command line

    gramflow run <config> [--out DIR] [--seed N] [--print-config]
    gramflow experiment <name> <config> [--out DIR] [--seed N] [--full-scale] [--print-config]

exit codes: 0 success, 1 numerical failure or failed check, 2 usage or configuration error
"""
import sys
import json
import time
import logging
import argparse
import pandas as pd
from pathlib import Path
from gramflow.defaults import *
from gramflow.paths import results_dir
from gramflow.errors import ConfigError, GramflowError
from gramflow.helper_functions import write_csv, write_json
from gramflow.config import RunConfig, SweepSpec, load_file
from gramflow.flow import run, drift_report
from gramflow.experiments import run_experiment, tabulate

__all__ = ['main', 'cmd_run', 'cmd_experiment', 'build_parser']

logger = logging.getLogger('gramflow')


def build_parser():
    parser = argparse.ArgumentParser(prog = 'gramflow', description = 'regularised projected gradient flow for bilinear quantum control')
    parser.add_argument('-v', '--verbose', action = 'store_true', help = 'debug logging')
    sub = parser.add_subparsers(dest = 'command')
    sub.required = True

    p_run = sub.add_parser('run', help = 'run the flow for one configuration')
    p_run.add_argument('config', type = str, help = 'YAML or JSON run configuration')

    p_exp = sub.add_parser('experiment', help = 'run an experiment suite')
    p_exp.add_argument('name', type = str, choices = sorted(VALID_EXPERIMENTS), help = 'experiment name')
    p_exp.add_argument('config', type = str, help = 'YAML or JSON sweep configuration')
    p_exp.add_argument('--full-scale', action = 'store_true', help = 'benchmark grid with %d points' % FULL_SCALE_N_POINTS)

    for p in (p_run, p_exp):
        p.add_argument('--out', type = str, default = None, help = 'output directory')
        p.add_argument('--seed', type = int, default = None, help = 'random seed')
        p.add_argument('--print-config', action = 'store_true', help = 'print the validated configuration and exit')
    return parser


def _configure_logging(verbose):
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s'))
    root = logging.getLogger('gramflow')
    root.handlers = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def cmd_run(args):
    cfg = RunConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.out is not None:
        overrides['output'] = {'directory': args.out, 'formats': cfg.formats}
    if overrides:
        cfg = cfg.replace(**overrides)

    if args.print_config:
        print(cfg.to_yaml())
        return EXIT_SUCCESS

    problem = cfg.build()
    logger.info('running %s (config %s): eps = %g, policy %r', cfg.name, cfg.hash, cfg.eps, cfg.policy)
    start = time.process_time()
    log = run(problem.objective, problem.constraints, problem.envelope, problem.field,
              eps = cfg.eps, policy = cfg.policy, tolerance = cfg.tolerance, max_iter = cfg.max_iter,
              drift_quadrature = cfg.drift_quadrature)
    logger.info('terminated with %s after %d iterations in %1.1f seconds, J = %1.10f',
                log.termination, log.n_iterations, time.process_time() - start, log.final_J)

    out = cfg.output_dir
    out.mkdir(parents = True, exist_ok = True)
    metadata = {'config_hash': cfg.hash, 'eps': cfg.eps}
    if 'csv' in cfg.formats:
        write_csv(log.df[log.csv_columns], out / ('%s_log.csv' % cfg.name), constraints = ','.join(log.labels),
                  termination = log.termination, **metadata)
        fields = pd.DataFrame({'t': problem.field.times, 'E_initial': log.initial_field.samples, 'E_final': log.terminal_field.samples})
        write_csv(fields, out / ('%s_field.csv' % cfg.name), **metadata)
    if 'json' in cfg.formats:
        summary = log.to_dict()
        summary['config'] = cfg.to_dict()
        summary['config_hash'] = cfg.hash
        summary['drift'] = drift_report(log, problem.constraints).reset_index().to_dict(orient = 'records')
        write_json(summary, out / ('%s_summary.json' % cfg.name))

    print(drift_report(log, problem.constraints).to_string())
    if log.failed:
        logger.error('numerical failure: %s', log.termination)
        return EXIT_NUMERICAL_FAILURE
    return EXIT_SUCCESS


def cmd_experiment(args):
    d = load_file(args.config)
    sweep = d['sweep'] if 'sweep' in d else {k: v for k, v in d.items() if k != 'output'}
    spec = SweepSpec.from_dict(args.name, sweep)
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.full_scale and spec.problem == 'benchmark':
        overrides['n_points'] = FULL_SCALE_N_POINTS
    if overrides:
        spec = spec.replace(**overrides)

    if args.print_config:
        print(json.dumps(spec.to_dict(), indent = 2, sort_keys = True))
        return EXIT_SUCCESS

    out = Path(args.out) if args.out is not None else Path(d.get('output', {}).get('directory', results_dir))
    out.mkdir(parents = True, exist_ok = True)

    logger.info('experiment %s (config %s)', args.name, spec.hash)
    start = time.process_time()
    tables, ok = run_experiment(args.name, spec)

    tau_tag = '%gfs' % spec.taus[0] if spec.problem == 'benchmark' else spec.problem
    files = []
    for key, df in tables.items():
        file_name = out / ('%s_%s_%s.csv' % (key, tau_tag, spec.hash))
        write_csv(df, file_name, experiment = args.name, config_hash = spec.hash)
        files.append(str(file_name))
        print(tabulate(df))

    summary = {'experiment': args.name, 'config_hash': spec.hash, 'spec': spec.to_dict(), 'passed': ok,
               'tables': files, 'runtime': time.process_time() - start}
    write_json(summary, out / ('%s_%s_%s.json' % (args.name, tau_tag, spec.hash)))

    if not ok:
        logger.error('experiment %s failed its checks', args.name)
        return EXIT_NUMERICAL_FAILURE
    return EXIT_SUCCESS


def main(argv = None):
    """
    :param argv: list of arguments (defaults to sys.argv[1:])
    :return: exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_SUCCESS if e.code == 0 else EXIT_USAGE

    _configure_logging(args.verbose)
    try:
        if args.command == 'run':
            return cmd_run(args)
        return cmd_experiment(args)
    except FileNotFoundError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except ConfigError as e:
        logger.error('invalid configuration: %s', e)
        return EXIT_USAGE
    except (GramflowError, ValueError) as e:
        logger.error('numerical failure: %s', e)
        return EXIT_NUMERICAL_FAILURE


if __name__ == '__main__':
    sys.exit(main())
