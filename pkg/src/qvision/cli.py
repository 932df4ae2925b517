#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Command line experiment runner

    qvision sim bell.qc
    qvision grad-check --trials 50
    qvision qpe-demo --phase 0.125 --counting 3 --depol 0.05
    qvision train-classifier --config desk.ini --epochs 5
    qvision train-gan --config gan.ini --output runs/gan
    qvision report-params --config desk.ini

Training commands accept ``--key value`` or ``--section.key value`` for any
configuration key. Exit codes: 0 success, 2 usage, 3 configuration,
4 input/output, 5 numeric failure.
"""
import argparse
import logging
import sys

import numpy as np

import qvision
from qvision.channels import NoiseModel, make_channel
from qvision.circuit import (
    MAX_COUNTING_QUBITS, parse_circuit, qpe_distribution, run_ideal,
    run_noisy,
)
from qvision.classifier import (
    evaluate_classifier, noise_sweep, train_classifier,
)
from qvision.classifier import parameter_report as classifier_report
from qvision.config import BARS_STRIPES, RunConfig, parse_float_list
from qvision.dataio import (
    OutputDirectory, center_crop, downsample, load_idx, metrics_text,
    synth_bars_stripes, write_metrics, write_params, write_pgm,
)
from qvision.errors import (
    ChannelParameterError, DataError, NumericError, QVisionError, UsageError,
)
from qvision.gradients import run_oracle_suite
from qvision.qgan import parameter_report as gan_report
from qvision.qgan import train_gan
from qvision.qstate import (
    Observable, batch_expectation, batch_expectation_dm,
)

logger = logging.getLogger(__name__)

CLASSIFIER_FIELDS = ('epoch', 'split', 'loss', 'accuracy')
GAN_FIELDS = ('iteration', 'disc_loss', 'gen_loss', 'd_fake_mean')
DEFAULT_DEPOLARIZING = (0.02, 0.05, 0.1)


class ArgumentParser(argparse.ArgumentParser):
    """Raise UsageError instead of exiting"""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault('allow_abbrev', False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(message)


def _common(parser):
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='more log output (repeatable)')
    parser.add_argument('--threads', type=int, default=None,
                        help='worker threads for independent evaluations')


def _training(parser):
    _common(parser)
    parser.add_argument('--config', help='configuration file')
    parser.add_argument('--output', help='output directory')
    parser.add_argument('--seed', help='random seed')


def build_parser():
    parser = ArgumentParser(
        prog='qvision',
        description='Quantum circuit simulation, hybrid classifiers and '
                    'patch GANs',
    )
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + qvision.__version__)
    commands = parser.add_subparsers(dest='command', metavar='command',
                                     parser_class=ArgumentParser)

    sim = commands.add_parser('sim', help='simulate a circuit file')
    _common(sim)
    sim.add_argument('circuit', help='circuit text file')
    sim.add_argument('--bind', action='append', default=[],
                     metavar='NAME=VALUE', help='value of a circuit symbol')
    sim.add_argument('--observable', action='append', default=[],
                     help='Pauli observable such as "Z0 Z1"')
    sim.add_argument('--noise', default='',
                     help='noise model such as "depol:0.05@end"')

    check = commands.add_parser('grad-check',
                                help='shift rule against finite differences')
    _common(check)
    check.add_argument('--trials', type=int, default=50)
    check.add_argument('--tolerance', type=float, default=1e-5)
    check.add_argument('--step', type=float, default=1e-4)
    check.add_argument('--seed', type=int, default=0)

    qpe = commands.add_parser('qpe-demo',
                              help='ideal against depolarized phase '
                                   'estimation')
    _common(qpe)
    qpe.add_argument('--phase', type=float, default=0.125)
    qpe.add_argument('--counting', type=int, default=3)
    qpe.add_argument('--depol', type=float, action='append', default=None,
                     help='depolarizing strength (repeatable)')
    qpe.add_argument('--output', help='CSV file, standard output if omitted')

    for name, text in (('train-classifier', 'train the quantum classifier'),
                       ('train-gan', 'train the patch quantum GAN'),
                       ('report-params', 'count trainable parameters')):
        _training(commands.add_parser(name, help=text))
    return parser


def parse_overrides(extra):
    """``--name value`` / ``--name=value`` pairs left over by argparse"""
    overrides = []
    items = list(extra)
    while items:
        item = items.pop(0)
        if not item.startswith('--') or len(item) < 3:
            raise UsageError('unexpected argument {!r}'.format(item))
        name, sep, value = item[2:].partition('=')
        if not sep:
            if not items:
                raise UsageError('--{} needs a value'.format(name))
            value = items.pop(0)
        overrides.append((name, value))
    return overrides


def _bitstring(index, width):
    return format(index, '0{}b'.format(width))


def cmd_sim(args):
    try:
        with open(args.circuit) as fileh:
            text = fileh.read()
    except OSError as err:
        raise DataError('cannot read {}: {}'.format(args.circuit, err)) \
            from None
    circuit = parse_circuit(text)
    values = {}
    for item in args.bind:
        name, sep, value = item.partition('=')
        try:
            if not sep:
                raise ValueError(item)
            values[name.strip()] = float(value)
        except ValueError:
            raise UsageError('bad --bind {!r}'.format(item)) from None
    unknown = set(values) - set(circuit.symbols)
    if unknown:
        raise UsageError('circuit has no symbol {}'.format(
            ', '.join(sorted(unknown))
        ))
    missing = [s for s in circuit.symbols if s not in values]
    if missing:
        raise UsageError('no --bind value for {}'.format(', '.join(missing)))
    bc = circuit.bind(values)
    try:
        nm = NoiseModel.parse(args.noise)
        observables = [Observable.parse(o) for o in args.observable]
    except ValueError as err:
        raise UsageError(str(err)) from None
    n = circuit.num_qubits
    if nm or circuit.has_noise:
        rho = run_noisy(bc, nm)
        probs = np.real(np.diag(rho.matrix))
        expect = lambda o: batch_expectation_dm(rho.matrix[None], o, n)[0]
    else:
        state = run_ideal(bc)
        probs = np.abs(state.amplitudes) ** 2
        expect = lambda o: batch_expectation(state.amplitudes[None], o, n)[0]
    for index, p in enumerate(probs):
        if p > 1e-15:
            print('{} {:.12g}'.format(_bitstring(index, n), p))
    for obs in observables:
        print('<{}> = {:.12g}'.format(obs, expect(obs)))
    return 0


def cmd_grad_check(args):
    rng = np.random.default_rng(args.seed)
    report = run_oracle_suite(rng, trials=args.trials,
                              tolerance=args.tolerance, h=args.step,
                              workers=args.threads or 1)
    print('trials = {}'.format(report.trials))
    print('ideal max deviation = {:.3g}'.format(report.ideal_deviation))
    print('noisy max deviation = {:.3g}'.format(report.noisy_deviation))
    if not report.passed:
        raise NumericError('{} gradient checks exceeded {}'.format(
            len(report.failures), args.tolerance
        ))
    return 0


def qpe_records(phase, counting, strengths):
    width = counting
    outcomes = [_bitstring(k, width) for k in range(1 << counting)]
    rows = [('ideal', 0.0, qpe_distribution(phase, counting))]
    for p in strengths:
        nm = NoiseModel.single('depolarizing', p)
        rows.append(('noisy', p, qpe_distribution(phase, counting, nm)))
    records = []
    for model, p, dist in rows:
        record = {'model': model, 'depolarizing': float(p)}
        record.update(zip(outcomes, (float(v) for v in dist)))
        records.append(record)
    return records, ['model', 'depolarizing'] + outcomes


def cmd_qpe_demo(args):
    if not 0.0 <= args.phase < 1.0:
        raise UsageError('--phase must lie in [0, 1)')
    if not 1 <= args.counting <= MAX_COUNTING_QUBITS:
        raise UsageError('--counting must lie in 1..{}'.format(
            MAX_COUNTING_QUBITS
        ))
    strengths = args.depol if args.depol is not None else \
        DEFAULT_DEPOLARIZING
    try:
        for p in strengths:
            make_channel('depolarizing', p)
    except ChannelParameterError as err:
        raise UsageError(str(err)) from None
    records, fields = qpe_records(args.phase, args.counting, strengths)
    if args.output:
        write_metrics(records, args.output, fields)
        logger.info('wrote %s', args.output)
    else:
        sys.stdout.write(metrics_text(records, fields))
    return 0


def _prepare(images, cfg):
    data = cfg.section('data')
    if data['crop']:
        images = images.map(lambda img: center_crop(img, data['crop']))
    if data['downsample'] > 1:
        images = images.map(lambda img: downsample(img, data['downsample']))
    return images


def load_datasets(cfg):
    """Training and (optional) test ImageSets for a run configuration"""
    data = cfg.section('data')
    classes = cfg.classes()
    if data['kind'] == BARS_STRIPES:
        train_seq, test_seq = np.random.SeedSequence(cfg.seed).spawn(2)
        train = synth_bars_stripes(data['size'], data['count'],
                                   np.random.default_rng(train_seq))
        test = synth_bars_stripes(data['size'], data['test_limit'],
                                  np.random.default_rng(test_seq))
        if classes:
            train, test = train.select(classes), test.select(classes)
        return train, test
    train = load_idx(data['images'], data['labels'] or None)
    test = None
    if data['test_images']:
        test = load_idx(data['test_images'], data['test_labels'] or None)
    if classes and train.labels is not None:
        train = train.select(classes)
        if test is not None and test.labels is not None:
            test = test.select(classes)
    train = _prepare(train, cfg).take(data['train_limit'])
    if test is not None:
        test = _prepare(test, cfg).take(data['test_limit'])
    return train, test


def _load_config(args, extra):
    overrides = parse_overrides(extra)
    for name in ('output', 'seed', 'threads'):
        value = getattr(args, name, None)
        if value is not None:
            overrides.append(('run.' + name, str(value)))
    if args.command == 'report-params':
        overrides = [(n, v) for n, v in overrides if not n.startswith('run.')]
    return RunConfig.load(args.command, args.config, overrides)


def cmd_train_classifier(cfg):
    train, test = load_datasets(cfg)
    if train.labels is None:
        raise DataError('classifier training needs labels')
    config = cfg.classifier_config(train.height, train.width,
                                   max(train.num_classes, 2))
    threads = cfg.get('run', 'threads')
    with OutputDirectory(cfg.get('run', 'output')) as out:
        with open(out.file('config.echo'), 'w') as fileh:
            fileh.write(cfg.echo())
        model, records = train_classifier(train, config, test, threads)
        write_metrics(records, out.file('metrics.csv'), CLASSIFIER_FIELDS,
                      preamble={'seed': cfg.seed})
        write_params(model.parameters(), out.file('checkpoint.txt'))
        sweep = parse_float_list(cfg.get('classifier', 'damping_sweep'))
        if sweep:
            target = test if test is not None and len(test) else train
            rows = [{'damping': 0.0,
                     'accuracy': evaluate_classifier(model, target)[0]}]
            rows += [{'damping': p, 'accuracy': a} for p, a in
                     noise_sweep(model, target, 'amplitude_damping', sweep)]
            write_metrics(rows, out.file('noise_sweep.csv'),
                          ('damping', 'accuracy'),
                          preamble={'seed': cfg.seed})
    return 0


def _write_gan_run(out, prefix, records, samples, generator, seed):
    write_metrics(records, out.file(*prefix, 'metrics.csv'), GAN_FIELDS,
                  preamble={'seed': seed})
    write_params(generator.parameters(), out.file(*prefix, 'checkpoint.txt'))
    for iteration, image in samples:
        write_pgm(image, out.file(*prefix, 'samples',
                                  '{:04d}.pgm'.format(iteration)))


def cmd_train_gan(cfg):
    train, _ = load_datasets(cfg)
    threads = cfg.get('run', 'threads')
    conditional = cfg.get('gan', 'conditional')
    if conditional and train.labels is None:
        raise DataError('class-conditional training needs labels')
    with OutputDirectory(cfg.get('run', 'output')) as out:
        with open(out.file('config.echo'), 'w') as fileh:
            fileh.write(cfg.echo())
        if not conditional:
            config = cfg.gan_config(train.height, train.width)
            g, _, records, samples = train_gan(train, config, threads)
            _write_gan_run(out, (), records, samples, g, cfg.seed)
            return 0
        for index, label in enumerate(train.classes):
            subset = train.select([label])
            config = cfg.gan_config(train.height, train.width,
                                    seed=cfg.seed + index)
            logger.info('class %d: %d images', label, len(subset))
            g, _, records, samples = train_gan(subset, config, threads)
            _write_gan_run(out, ('class_{}'.format(label),), records,
                           samples, g, config.seed)
    return 0


def cmd_report_params(cfg):
    height, width = cfg.image_shape()
    classifier = cfg.classifier_config(height, width)
    for key, value in classifier_report(classifier).items():
        print('classifier.{} = {}'.format(key, value))
    for key, value in gan_report(cfg.gan_config(height, width)).items():
        print('gan.{} = {}'.format(key, value))
    return 0


def _configure_logging(verbose):
    level = qvision.logger.level or logging.WARNING
    if verbose:
        level = max(logging.DEBUG, level - 10 * verbose)
        qvision.logger.setLevel(level)
    logging.basicConfig(format='%(levelname)s %(name)s: %(message)s')


def run(argv=None):
    """Run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        _configure_logging(getattr(args, 'verbose', 0))
        if args.command is None:
            raise UsageError('a command is required')
        if args.threads is not None and args.threads < 1:
            raise UsageError('--threads must be at least 1')
        if args.command in ('sim', 'grad-check', 'qpe-demo'):
            if extra:
                raise UsageError('unrecognized arguments: {}'.format(
                    ' '.join(extra)
                ))
            handler = {'sim': cmd_sim, 'grad-check': cmd_grad_check,
                       'qpe-demo': cmd_qpe_demo}[args.command]
            return handler(args)
        cfg = _load_config(args, extra)
        handler = {'train-classifier': cmd_train_classifier,
                   'train-gan': cmd_train_gan,
                   'report-params': cmd_report_params}[args.command]
        return handler(cfg)
    except QVisionError as err:
        print('qvision: error: {}'.format(err), file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print('qvision: error: {}'.format(err), file=sys.stderr)
        return DataError.exit_code


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
