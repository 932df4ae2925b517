#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Run configuration

Configuration files are INI style (``[section]`` headers, ``key = value``
lines, ``#`` or ``;`` comments). Every key is checked against the schema of
the selected subcommand and may be overridden with ``--key value`` or
``--section.key value`` flags, which win over the file.
"""
import configparser
import io
import logging
from dataclasses import dataclass, field

from qvision.channels import NoiseModel, PLACEMENT_ALIASES
from qvision.classifier import ClassifierConfig
from qvision.errors import ChannelParameterError, ConfigError
from qvision.gradients import OPTIMIZERS
from qvision.qgan import GanConfig

logger = logging.getLogger(__name__)

IDX = 'idx'
BARS_STRIPES = 'bars_stripes'
DATASETS = (IDX, BARS_STRIPES)

# Side of the images in an IDX file before cropping and downsampling
IDX_SIDE = 28

SECTIONS = {
    'run': {
        'seed': (int, 0),
        'output': (str, 'runs/latest'),
        'threads': (int, 1),
    },
    'data': {
        'kind': (str, BARS_STRIPES),
        'images': (str, ''),
        'labels': (str, ''),
        'test_images': (str, ''),
        'test_labels': (str, ''),
        'classes': (str, '0,1'),
        'crop': (int, 24),
        'downsample': (int, 3),
        'train_limit': (int, 200),
        'test_limit': (int, 100),
        'size': (int, 8),
        'count': (int, 300),
    },
    'noise': {
        'kind': (str, ''),
        'parameter': (float, 0.0),
        'placement': (str, 'end'),
        'qubits': (str, ''),
    },
    'classifier': {
        'qubits': (int, 3),
        'layers': (int, 3),
        'window1': (int, 2),
        'stride1': (int, 2),
        'window2': (int, 2),
        'stride2': (int, 1),
        'pool': (bool, True),
        'second_conv': (bool, True),
        'learning_rate': (float, 1e-3),
        'optimizer': (str, 'adaptive'),
        'epochs': (int, 15),
        'batch_size': (int, 1),
        'window_sample_rate': (float, 1.0),
        'validation_fraction': (float, 0.0),
        'damping_sweep': (str, ''),
    },
    'gan': {
        'sub_generators': (int, 4),
        'data_qubits': (int, 4),
        'ancilla_qubits': (int, 1),
        'depth': (int, 6),
        'iterations': (int, 300),
        'batch_size': (int, 8),
        'generator_lr': (float, 2e-4),
        'discriminator_lr': (float, 2e-4),
        'optimizer': (str, 'adaptive'),
        'sample_every': (int, 50),
        'conditional': (bool, False),
    },
}

COMMAND_SECTIONS = {
    'train-classifier': ('run', 'data', 'noise', 'classifier'),
    'train-gan': ('run', 'data', 'noise', 'gan'),
    'report-params': ('data', 'classifier', 'gan'),
}


def _convert(kind, section, key, text):
    text = text.strip()
    try:
        if kind is bool:
            states = configparser.ConfigParser.BOOLEAN_STATES
            if text.lower() not in states:
                raise ValueError(text)
            return states[text.lower()]
        return kind(text)
    except ValueError:
        raise ConfigError('[{}] {} = {!r} is not a valid {}'.format(
            section, key, text, kind.__name__
        )) from None


def _format(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_int_list(text):
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(t) for t in text.replace(' ', '').split(','))
    except ValueError:
        raise ConfigError('expected a comma separated integer list, '
                          'got {!r}'.format(text)) from None


def parse_float_list(text):
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(t) for t in text.replace(' ', '').split(','))
    except ValueError:
        raise ConfigError('expected a comma separated number list, '
                          'got {!r}'.format(text)) from None


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    @staticmethod
    def defaults(command):
        if command not in COMMAND_SECTIONS:
            raise ConfigError('no configuration for {!r}'.format(command))
        return RunConfig(command, {
            name: {key: default for key, (_, default) in
                   SECTIONS[name].items()}
            for name in COMMAND_SECTIONS[command]
        })

    @staticmethod
    def load(command, path=None, overrides=()):
        """Defaults, then the file at ``path``, then ``overrides``.

        :raises ConfigError:
            On unreadable files, unknown sections or keys and bad values
        """
        cfg = RunConfig.defaults(command)
        if path is not None:
            parser = configparser.ConfigParser(
                interpolation=None, inline_comment_prefixes=('#', ';')
            )
            try:
                with open(path) as fileh:
                    parser.read_file(fileh)
            except OSError as err:
                raise ConfigError('cannot read {}: {}'.format(
                    path, err
                )) from None
            except configparser.Error as err:
                raise ConfigError('{}: {}'.format(
                    path, str(err).splitlines()[0]
                )) from None
            for section in parser.sections():
                for key, text in parser.items(section):
                    cfg.set(section, key, text)
        for name, text in overrides:
            cfg.override(name, text)
        cfg.validate()
        return cfg

    def _schema(self, section, key):
        if section not in self.values:
            raise ConfigError('unknown section [{}] for {}'.format(
                section, self.command
            ))
        if key not in SECTIONS[section]:
            raise ConfigError('unknown key {!r} in [{}]'.format(key, section))
        return SECTIONS[section][key][0]

    def set(self, section, key, text):
        kind = self._schema(section, key)
        self.values[section][key] = _convert(kind, section, key, text)

    def override(self, name, text):
        """Apply ``--name value``; ``name`` is ``key`` or ``section.key``"""
        name = name.replace('-', '_')
        if '.' in name:
            section, key = name.split('.', 1)
            return self.set(section, key, text)
        owners = [s for s in self.values if name in SECTIONS[s]]
        if not owners:
            raise ConfigError('unknown option --{}'.format(name))
        if len(owners) > 1:
            raise ConfigError('--{} is ambiguous, use one of {}'.format(
                name, ', '.join('--{}.{}'.format(s, name) for s in owners)
            ))
        self.set(owners[0], name, text)

    def get(self, section, key):
        return self.values[section][key]

    def section(self, name):
        return dict(self.values[name])

    @property
    def seed(self):
        return self.values.get('run', {}).get('seed', 0)

    def validate(self):
        if 'data' in self.values:
            data = self.values['data']
            if data['kind'] not in DATASETS:
                raise ConfigError('[data] kind must be one of {}'.format(
                    ', '.join(DATASETS)
                ))
            if data['kind'] == IDX and self.command != 'report-params' \
                    and not data['images']:
                raise ConfigError('[data] images is required for idx data')
            if data['size'] < 2:
                raise ConfigError('[data] size must be at least 2')
            if data['downsample'] < 1 or data['crop'] < 0:
                raise ConfigError('[data] crop and downsample must be '
                                  'positive')
            side = data['crop'] or IDX_SIDE
            if data['kind'] == IDX and side % data['downsample']:
                raise ConfigError('{} pixels do not downsample by {}'.format(
                    side, data['downsample']
                ))
            self.classes()
        for name in ('classifier', 'gan'):
            if name in self.values and \
                    self.values[name]['optimizer'] not in OPTIMIZERS:
                raise ConfigError('[{}] optimizer must be one of {}'.format(
                    name, ', '.join(OPTIMIZERS)
                ))
        if 'run' in self.values and self.values['run']['threads'] < 1:
            raise ConfigError('[run] threads must be at least 1')
        self._check_noise_qubits(self.noise_model())
        if 'classifier' in self.values:
            parse_float_list(self.values['classifier']['damping_sweep'])
        return self

    def _check_noise_qubits(self, nm):
        widths = []
        if 'classifier' in self.values:
            widths.append(('[classifier] qubits',
                           self.values['classifier']['qubits']))
        if 'gan' in self.values:
            g = self.values['gan']
            widths.append(('[gan] data_qubits + ancilla_qubits',
                           g['data_qubits'] + g['ancilla_qubits']))
        for entry in nm.entries:
            for qubit in entry.qubits or ():
                for what, width in widths:
                    if not 0 <= qubit < width:
                        raise ConfigError(
                            '[noise] qubit {} outside the {} of {}'.format(
                                qubit, what, width
                            )
                        )

    def classes(self):
        classes = parse_int_list(self.values['data']['classes'])
        if len(set(classes)) != len(classes):
            raise ConfigError('[data] classes repeats a class')
        return classes

    def image_shape(self):
        """Image size after cropping and downsampling"""
        data = self.values['data']
        if data['kind'] == BARS_STRIPES:
            return data['size'], data['size']
        side = (data['crop'] or IDX_SIDE) // data['downsample']
        return side, side

    def noise_model(self):
        noise = self.values.get('noise')
        if not noise or not noise['kind']:
            return NoiseModel()
        placement = PLACEMENT_ALIASES.get(noise['placement'])
        if placement is None:
            raise ConfigError('[noise] placement must be end or layer')
        qubits = parse_int_list(noise['qubits']) or None
        try:
            if noise['kind'] == 'flip':
                return NoiseModel.flip(noise['parameter'], placement)
            return NoiseModel.single(noise['kind'], noise['parameter'],
                                     placement, qubits)
        except ChannelParameterError as err:
            raise ConfigError('[noise] {}'.format(err)) from None

    def classifier_config(self, height=None, width=None, num_classes=None):
        c = self.values['classifier']
        if height is None:
            height, width = self.image_shape()
        if num_classes is None:
            num_classes = max(len(self.classes()), 2)
        cfg = ClassifierConfig(
            image_height=height, image_width=width, num_classes=num_classes,
            qubits=c['qubits'], layers=c['layers'],
            window1=c['window1'], stride1=c['stride1'],
            window2=c['window2'], stride2=c['stride2'],
            pool=c['pool'], second_conv=c['second_conv'],
            noise=self.noise_model(), learning_rate=c['learning_rate'],
            optimizer=c['optimizer'], epochs=c['epochs'],
            batch_size=c['batch_size'],
            window_sample_rate=c['window_sample_rate'],
            validation_fraction=c['validation_fraction'],
            seed=self.seed,
        )
        return cfg.validate()

    def gan_config(self, height=None, width=None, seed=None):
        g = self.values['gan']
        if height is None:
            height, width = self.image_shape()
        cfg = GanConfig(
            image_height=height, image_width=width,
            sub_generators=g['sub_generators'], data_qubits=g['data_qubits'],
            ancilla_qubits=g['ancilla_qubits'], depth=g['depth'],
            iterations=g['iterations'], batch_size=g['batch_size'],
            generator_lr=g['generator_lr'],
            discriminator_lr=g['discriminator_lr'],
            optimizer=g['optimizer'], sample_every=g['sample_every'],
            noise=self.noise_model(),
            seed=self.seed if seed is None else seed,
        )
        return cfg.validate()

    def echo(self):
        """The resolved configuration in the file format"""
        buffer = io.StringIO()
        buffer.write('# {}\n'.format(self.command))
        for name, values in self.values.items():
            buffer.write('[{}]\n'.format(name))
            for key, value in values.items():
                buffer.write('{} = {}\n'.format(key, _format(value)))
            buffer.write('\n')
        return buffer.getvalue()
