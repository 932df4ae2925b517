#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Data re-uploading quantum convolution classifier

A quantum kernel slides over the image. For every window it runs a small
circuit of ``L`` re-uploading layers; each layer applies
``rz(w1 x + b1) ry(w2 x + b2) rz(w3 x + b3)`` to every qubit, with ``x`` taken
cyclically from the window pixels scaled to [0, pi], followed by a CZ ring.
Every layer reads the same pixels.
The per-qubit <Z> values form the channels of the output feature map.

The model is conv -> 2x2 maxpool -> conv -> softmax head. Kernel gradients
come from the parameter-shift rule on every rotation angle and are chained
through the angle maps ``w x + b`` into weights, biases and (for the second
convolution) the incoming feature map.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import log_softmax, softmax

from qvision.channels import AFTER_EACH_LAYER, END_OF_CIRCUIT, NoiseModel
from qvision.channels import batch_apply_entries
from qvision.circuit import Circuit, Instruction
from qvision.errors import ConfigError, DataError, DimensionError, NumericError
from qvision.gradients import (
    ParamVector, OptimizerState, glorot_uniform, optimizer_step, shift_combine,
    shift_table,
)
from qvision.qstate import (
    batch_apply, batch_apply_dm, batch_dm_probabilities, batch_probabilities,
    batch_to_density, batch_z_expectations, batch_zero_states, cz_diagonal,
    ry, rz,
)

logger = logging.getLogger(__name__)

SLOT_NAMES = ('w1', 'w2', 'w3', 'b1', 'b2', 'b3')


def ring_pairs(num_qubits):
    if num_qubits < 2:
        return []
    if num_qubits == 2:
        return [(0, 1)]
    return [(j, (j + 1) % num_qubits) for j in range(num_qubits)]


@dataclass
class ReuploadingKernel:
    """Quantum kernel over ``window_side`` x ``window_side`` x ``channels``
    windows. ``params`` has shape (layers, qubits, 6): three angle scales
    followed by three angle offsets per qubit and layer.
    """
    window_side: int
    num_qubits: int
    num_layers: int
    channels: int = 1
    params: Optional[np.ndarray] = None

    def __post_init__(self):
        shape = (self.num_layers, self.num_qubits, 6)
        if self.params is None:
            self.params = np.zeros(shape)
        self.params = np.asarray(self.params, dtype=float).reshape(shape)
        # every layer re-uploads the same pixels
        layer = np.arange(self.num_qubits * 3) % self.window_size
        self.pixel_index = np.broadcast_to(
            layer.reshape(self.num_qubits, 3),
            (self.num_layers, self.num_qubits, 3),
        ).copy()
        self._ring = cz_diagonal(ring_pairs(self.num_qubits), self.num_qubits)

    @property
    def window_size(self):
        return self.window_side * self.window_side * self.channels

    @property
    def num_parameters(self):
        return self.params.size

    @property
    def weights(self):
        return self.params[..., :3]

    @property
    def biases(self):
        return self.params[..., 3:]

    def with_params(self, params):
        return replace(self, params=np.array(params, dtype=float))

    def parameter_names(self, prefix):
        return tuple(
            '{}.l{}.q{}.{}'.format(prefix, layer, qubit, slot)
            for layer in range(self.num_layers)
            for qubit in range(self.num_qubits)
            for slot in SLOT_NAMES
        )

    def scaled_inputs(self, windows):
        """Pixel inputs per rotation, pi * x, shape (batch, L, q, 3)"""
        windows = np.asarray(windows, dtype=float)
        flat = windows.reshape(windows.shape[0], -1)
        if flat.shape[1] != self.window_size:
            raise DimensionError('window of {} values for a kernel of {}'.format(
                flat.shape[1], self.window_size
            ))
        return np.pi * flat[:, self.pixel_index]

    def angles(self, windows):
        xs = self.scaled_inputs(windows)
        return self.weights * xs + self.biases, xs

    def to_circuit(self, window):
        """The kernel circuit for one window, with literal angles"""
        angles, _ = self.angles(np.asarray(window)[None])
        ins = []
        for layer in range(self.num_layers):
            for qubit in range(self.num_qubits):
                a = angles[0, layer, qubit]
                ins += [Instruction('rz', (qubit,), float(a[0])),
                        Instruction('ry', (qubit,), float(a[1])),
                        Instruction('rz', (qubit,), float(a[2]))]
            ins += [Instruction('cz', pair)
                    for pair in ring_pairs(self.num_qubits)]
        return Circuit(self.num_qubits, tuple(ins))

    def expectations(self, angles, nm=None):
        """<Z_q> for a stack of angle sets (batch, L, q, 3) -> (batch, q)"""
        n = self.num_qubits
        batch = angles.shape[0]
        nm = nm or NoiseModel()
        layer_noise = nm.at(AFTER_EACH_LAYER)
        if layer_noise:
            rho = batch_to_density(batch_zero_states(batch, n))
            ring = self._ring[:, None] * self._ring.conj()[None, :]
        else:
            amps = batch_zero_states(batch, n)
        for layer in range(self.num_layers):
            for qubit in range(n):
                a = angles[:, layer, qubit]
                u = rz(a[:, 2]) @ ry(a[:, 1]) @ rz(a[:, 0])
                if layer_noise:
                    rho = batch_apply_dm(rho, u, (qubit,), n)
                else:
                    amps = batch_apply(amps, u, (qubit,), n)
            if layer_noise:
                rho = batch_apply_entries(rho * ring, layer_noise, n)
            else:
                amps = amps * self._ring
        end_noise = nm.at(END_OF_CIRCUIT)
        if layer_noise or end_noise:
            if not layer_noise:
                rho = batch_to_density(amps)
            rho = batch_apply_entries(rho, end_noise, n)
            probs = batch_dm_probabilities(rho)
        else:
            probs = batch_probabilities(amps)
        return batch_z_expectations(probs, n)

    def evaluate(self, windows, nm=None):
        angles, _ = self.angles(windows)
        return self.expectations(angles, nm)

    def evaluate_with_jacobian(self, windows, nm=None):
        """Outputs (batch, q) and d outputs / d angles (batch, L*q*3, q)"""
        angles, xs = self.angles(windows)
        count = angles[0].size
        table = shift_table(angles.reshape(angles.shape[0], count))
        outputs = self.expectations(table.reshape((-1,) + angles.shape[1:]),
                                    nm)
        base, jacobian = shift_combine(outputs, count)
        return base, jacobian, xs

    def backward(self, jacobian, xs, upstream):
        """Chain d loss / d outputs (batch, q) through the angle maps.

        :returns:
            ``(d params (L, q, 6), d windows (batch, window_size))``
        """
        batch = upstream.shape[0]
        d_angles = np.einsum('bpq,bq->bp', jacobian, upstream)
        xs = xs.reshape(batch, -1)
        grad = np.zeros_like(self.params)
        grad[..., :3] = (d_angles * xs).sum(axis=0).reshape(self.weights.shape)
        grad[..., 3:] = d_angles.sum(axis=0).reshape(self.biases.shape)
        scatter = np.zeros((d_angles.shape[1], self.window_size))
        scatter[np.arange(d_angles.shape[1]), self.pixel_index.reshape(-1)] = 1
        d_windows = (d_angles * np.pi * self.weights.reshape(-1)) @ scatter
        return grad, d_windows


@dataclass
class FeatureMap:
    values: np.ndarray  # (height, width, channels), entries in [-1, 1]

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def channels(self):
        return self.values.shape[2]


def _as_channels(image):
    image = np.asarray(image, dtype=float)
    return image[..., None] if image.ndim == 2 else image


def extract_windows(image, side, stride):
    """All ``side`` x ``side`` windows at ``stride``: (oh, ow, side, side, C)"""
    image = _as_channels(image)
    if image.shape[0] < side or image.shape[1] < side:
        raise DimensionError('{}x{} image is smaller than a {}x{} window'.format(
            image.shape[0], image.shape[1], side, side
        ))
    if stride < 1:
        raise DimensionError('stride must be at least 1')
    view = sliding_window_view(image, (side, side), axis=(0, 1))
    return np.moveaxis(view[::stride, ::stride], 2, -1)


def scatter_windows(d_windows, shape, side, stride):
    """Adjoint of ``extract_windows``: sum window gradients into an image"""
    out = np.zeros(shape)
    rows, cols = d_windows.shape[:2]
    for i in range(rows):
        for j in range(cols):
            out[i * stride:i * stride + side,
                j * stride:j * stride + side] += d_windows[i, j]
    return out


def kernel_forward(kernel, window, nm=None):
    """<Z_q> per qubit for one window with pixels in [0, 1]"""
    window = _as_channels(window)
    expected = (kernel.window_side, kernel.window_side, kernel.channels)
    if window.shape != expected:
        raise DimensionError('window of shape {}, kernel expects {}'.format(
            window.shape, expected
        ))
    return kernel.evaluate(window[None], nm)[0]


def quantum_conv_forward(image, kernel, stride, nm=None):
    """Slide ``kernel`` over ``image`` (H x W or H x W x C, values in [0, 1])"""
    image = _as_channels(image)
    if image.shape[2] != kernel.channels:
        raise DimensionError('{} channels for a {}-channel kernel'.format(
            image.shape[2], kernel.channels
        ))
    windows = extract_windows(image, kernel.window_side, stride)
    rows, cols = windows.shape[:2]
    values = kernel.evaluate(windows.reshape((-1,) + windows.shape[2:]), nm)
    return FeatureMap(values.reshape(rows, cols, kernel.num_qubits))


def _pool_blocks(values):
    height, width, channels = values.shape
    if height % 2 or width % 2:
        raise DimensionError('maxpool needs even dimensions, got {}x{}'.format(
            height, width
        ))
    return values.reshape(height // 2, 2, width // 2, 2, channels) \
        .transpose(0, 2, 4, 1, 3).reshape(height // 2, width // 2, channels, 4)


def maxpool2(fm):
    """2x2 non-overlapping max per channel"""
    return FeatureMap(_pool_blocks(fm.values).max(axis=-1))


def maxpool2_backward(fm, upstream):
    """Route gradients to the first maximum of each 2x2 block"""
    blocks = _pool_blocks(fm.values)
    mask = np.zeros_like(blocks)
    np.put_along_axis(mask, blocks.argmax(axis=-1)[..., None], 1.0, axis=-1)
    grad = mask * upstream[..., None]
    oh, ow, channels = upstream.shape
    return grad.reshape(oh, ow, channels, 2, 2).transpose(0, 3, 1, 4, 2) \
        .reshape(2 * oh, 2 * ow, channels)


def head_forward(features, weights, bias):
    """softmax(features W + b); ``weights`` is (features x classes)"""
    features = np.asarray(features, dtype=float)
    if features.shape[-1] != weights.shape[0]:
        raise DimensionError('{} features for a head of {}'.format(
            features.shape[-1], weights.shape[0]
        ))
    return softmax(features @ weights + bias, axis=-1)


@dataclass
class ClassifierConfig:
    image_height: int = 8
    image_width: int = 8
    num_classes: int = 2
    qubits: int = 3
    layers: int = 3
    window1: int = 2
    stride1: int = 2
    window2: int = 2
    stride2: int = 1
    pool: bool = True
    second_conv: bool = True
    noise: NoiseModel = field(default_factory=NoiseModel)
    learning_rate: float = 1e-3
    optimizer: str = 'adaptive'
    epochs: int = 15
    batch_size: int = 1
    window_sample_rate: float = 1.0
    validation_fraction: float = 0.0
    seed: int = 0

    def shapes(self):
        """Spatial size after each stage: conv1, pool, conv2"""
        def conv(size, side, stride):
            if size < side:
                raise ConfigError('window {} does not fit size {}'.format(
                    side, size
                ))
            return (size - side) // stride + 1

        h1 = conv(self.image_height, self.window1, self.stride1)
        w1 = conv(self.image_width, self.window1, self.stride1)
        hp, wp = h1, w1
        if self.pool:
            if h1 % 2 or w1 % 2:
                raise ConfigError(
                    'first feature map {}x{} is odd and cannot be pooled'
                    .format(h1, w1)
                )
            hp, wp = h1 // 2, w1 // 2
        h2, w2 = hp, wp
        if self.second_conv:
            h2 = conv(hp, self.window2, self.stride2)
            w2 = conv(wp, self.window2, self.stride2)
        return (h1, w1), (hp, wp), (h2, w2)

    @property
    def num_features(self):
        (h2, w2) = self.shapes()[2]
        return h2 * w2 * self.qubits

    def validate(self):
        if self.qubits < 1 or self.layers < 1:
            raise ConfigError('qubits and layers must be positive')
        if not 0 < self.window_sample_rate <= 1:
            raise ConfigError('window_sample_rate must lie in (0, 1]')
        if not 0 <= self.validation_fraction < 1:
            raise ConfigError('validation_fraction must lie in [0, 1)')
        if self.num_classes < 2:
            raise ConfigError('at least two classes are needed')
        if self.stride1 < 1 or self.stride2 < 1:
            raise ConfigError('strides must be at least 1')
        self.shapes()
        return self


@dataclass
class ClassifierModel:
    conv1: ReuploadingKernel
    conv2: Optional[ReuploadingKernel]
    head_weights: np.ndarray
    head_bias: np.ndarray
    config: ClassifierConfig

    @property
    def kernels(self):
        return (self.conv1,) if self.conv2 is None else (self.conv1, self.conv2)

    @property
    def num_parameters(self):
        return sum(k.num_parameters for k in self.kernels) + \
            self.head_weights.size + self.head_bias.size

    def parameters(self):
        names = self.conv1.parameter_names('conv1')
        values = [self.conv1.params.ravel()]
        if self.conv2 is not None:
            names += self.conv2.parameter_names('conv2')
            values.append(self.conv2.params.ravel())
        features, classes = self.head_weights.shape
        names += tuple('head.w.{}.{}'.format(f, c)
                       for f in range(features) for c in range(classes))
        names += tuple('head.b.{}'.format(c) for c in range(classes))
        values += [self.head_weights.ravel(), self.head_bias]
        return ParamVector(np.concatenate(values), names)

    def with_parameters(self, theta):
        values = theta.values if isinstance(theta, ParamVector) else \
            np.asarray(theta, dtype=float)
        if values.shape[0] != self.num_parameters:
            raise DimensionError('{} values for {} parameters'.format(
                values.shape[0], self.num_parameters
            ))
        offset = 0
        kernels = []
        for kernel in self.kernels:
            size = kernel.num_parameters
            kernels.append(kernel.with_params(values[offset:offset + size]))
            offset += size
        size = self.head_weights.size
        weights = values[offset:offset + size].reshape(self.head_weights.shape)
        bias = values[offset + size:].copy()
        return ClassifierModel(kernels[0],
                               kernels[1] if len(kernels) > 1 else None,
                               weights, bias, self.config)

    def with_noise(self, nm):
        return replace(self, config=replace(self.config, noise=nm))


def init_classifier(config, rng):
    """Kernel angles from U(-pi, pi), head from Glorot uniform"""
    config.validate()
    shape = (config.layers, config.qubits, 6)
    conv1 = ReuploadingKernel(config.window1, config.qubits, config.layers, 1,
                              rng.uniform(-np.pi, np.pi, size=shape))
    conv2 = None
    if config.second_conv:
        conv2 = ReuploadingKernel(config.window2, config.qubits,
                                  config.layers, config.qubits,
                                  rng.uniform(-np.pi, np.pi, size=shape))
    weights = glorot_uniform(rng, config.num_features, config.num_classes)
    return ClassifierModel(conv1, conv2, weights,
                           np.zeros(config.num_classes), config)


def _features_to_pixels(values):
    return (values + 1) / 2


def features(model, images):
    """Flattened head inputs for a stack of images (count, H, W)"""
    cfg = model.config
    nm = cfg.noise
    images = np.asarray(images, dtype=float)
    count = images.shape[0]
    windows = np.stack([extract_windows(img, cfg.window1, cfg.stride1)
                        for img in images])
    grid = windows.shape[1:3]
    fm = model.conv1.evaluate(windows.reshape((-1,) + windows.shape[3:]), nm)
    fm = fm.reshape((count,) + grid + (cfg.qubits,))
    if cfg.pool:
        fm = np.stack([maxpool2(FeatureMap(v)).values for v in fm])
    if model.conv2 is not None:
        windows = np.stack([
            extract_windows(_features_to_pixels(v), cfg.window2, cfg.stride2)
            for v in fm
        ])
        grid = windows.shape[1:3]
        fm = model.conv2.evaluate(windows.reshape((-1,) + windows.shape[3:]),
                                  nm)
        fm = fm.reshape((count,) + grid + (cfg.qubits,))
    return fm.reshape(count, -1)


def predict_proba(model, images):
    return head_forward(features(model, images), model.head_weights,
                        model.head_bias)


def image_loss_and_gradient(model, image, label, window_mask=None):
    """Cross-entropy of one image and its gradient over ``model.parameters()``.

    ``window_mask`` selects the first-convolution windows whose kernel
    gradient is computed; the rest contribute forward values only and the
    sampled contribution is rescaled by the sampling fraction.
    """
    cfg = model.config
    nm = cfg.noise
    windows1 = extract_windows(image, cfg.window1, cfg.stride1)
    grid1 = windows1.shape[:2]
    flat1 = windows1.reshape((-1,) + windows1.shape[2:])
    if window_mask is None:
        window_mask = np.ones(flat1.shape[0], dtype=bool)
    sampled = np.flatnonzero(window_mask)
    values1 = np.empty((flat1.shape[0], cfg.qubits))
    base, jac1, xs1 = model.conv1.evaluate_with_jacobian(flat1[sampled], nm)
    values1[sampled] = base
    rest = np.flatnonzero(~window_mask)
    if rest.size:
        values1[rest] = model.conv1.evaluate(flat1[rest], nm)
    fm1 = FeatureMap(values1.reshape(grid1 + (cfg.qubits,)))

    pooled = maxpool2(fm1) if cfg.pool else fm1
    if model.conv2 is not None:
        windows2 = extract_windows(_features_to_pixels(pooled.values),
                                   cfg.window2, cfg.stride2)
        grid2 = windows2.shape[:2]
        flat2 = windows2.reshape((-1,) + windows2.shape[2:])
        values2, jac2, xs2 = model.conv2.evaluate_with_jacobian(flat2, nm)
        feats = values2.reshape(-1)
    else:
        feats = pooled.values.reshape(-1)

    logits = feats @ model.head_weights + model.head_bias
    log_probs = log_softmax(logits)
    loss = -log_probs[label]
    d_logits = np.exp(log_probs)
    d_logits[label] -= 1
    d_head_w = np.outer(feats, d_logits)
    d_feats = model.head_weights @ d_logits

    grads = []
    if model.conv2 is not None:
        upstream2 = d_feats.reshape(-1, cfg.qubits)
        d_conv2, d_win2 = model.conv2.backward(jac2, xs2, upstream2)
        d_pooled = scatter_windows(
            d_win2.reshape(grid2 + windows2.shape[2:]),
            pooled.values.shape, cfg.window2, cfg.stride2,
        ) / 2
    else:
        d_pooled = d_feats.reshape(pooled.values.shape)
    d_fm1 = maxpool2_backward(fm1, d_pooled) if cfg.pool else d_pooled
    upstream1 = d_fm1.reshape(-1, cfg.qubits)[sampled]
    d_conv1, _ = model.conv1.backward(jac1, xs1, upstream1)
    d_conv1 *= window_mask.size / max(sampled.size, 1)

    grads.append(d_conv1.ravel())
    if model.conv2 is not None:
        grads.append(d_conv2.ravel())
    grads += [d_head_w.ravel(), d_logits]
    return float(loss), np.concatenate(grads)


def dataset_loss(model, dataset):
    log_probs = np.log(np.clip(predict_proba(model, dataset.images),
                               1e-300, None))
    return float(-log_probs[np.arange(len(dataset)), dataset.labels].mean())


def evaluate_classifier(model, dataset):
    """Accuracy and confusion counts (rows: true class, columns: predicted).

    Ties in the predicted probabilities go to the lowest class index.
    """
    if not len(dataset):
        raise DataError('cannot evaluate on an empty dataset')
    classes = model.config.num_classes
    predicted = np.argmax(predict_proba(model, dataset.images), axis=1)
    confusion = np.zeros((classes, classes), dtype=int)
    np.add.at(confusion, (dataset.labels, predicted), 1)
    accuracy = float(np.trace(confusion)) / len(dataset)
    return accuracy, confusion


def _check_dataset(dataset, config):
    if dataset is None or not len(dataset):
        raise DataError('empty training dataset')
    if dataset.labels is None:
        raise DataError('training data needs labels')
    if (dataset.height, dataset.width) != (config.image_height,
                                           config.image_width):
        raise DataError('images are {}x{}, model expects {}x{}'.format(
            dataset.height, dataset.width, config.image_height,
            config.image_width
        ))
    counts = np.bincount(dataset.labels, minlength=config.num_classes)
    if np.any(counts[:config.num_classes] == 0):
        raise DataError('every class needs at least one training sample')


def _split(dataset, fraction, rng):
    if fraction <= 0:
        return dataset, None
    order = rng.permutation(len(dataset))
    held = max(1, int(round(fraction * len(dataset))))
    val, train = order[:held], order[held:]
    pick = lambda idx: type(dataset)(dataset.images[idx], dataset.labels[idx],
                                     dataset.num_classes, dataset.classes)
    return pick(train), pick(val)


def train_classifier(dataset, config, test=None, threads=1):
    """Train by mini-batch descent on the mean cross-entropy.

    :returns:
        ``(model, records)`` with one ``{epoch, split, loss, accuracy}``
        record per epoch and split (train, validation when configured, test
        when given)
    :raises NumericError:
        If a batch loss or gradient turns non-finite
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    model = init_classifier(config, rng)
    if config.epochs <= 0:
        return model, []
    _check_dataset(dataset, config)
    train, validation = _split(dataset, config.validation_fraction, rng)
    _check_dataset(train, config)
    splits = [('train', train)]
    if validation is not None:
        splits.append(('validation', validation))
    if test is not None and len(test):
        splits.append(('test', test))

    theta = model.parameters()
    state = OptimizerState(config.optimizer, config.learning_rate)
    windows = np.prod(config.shapes()[0])
    if config.window_sample_rate < 1:
        logger.warning('computing kernel gradients on %.0f%% of windows',
                       100 * config.window_sample_rate)

    records = []
    pool = ThreadPoolExecutor(max_workers=threads,
                              thread_name_prefix='qvision') \
        if threads > 1 else None
    try:
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(len(train))
            for start in range(0, len(order), config.batch_size):
                batch = order[start:start + config.batch_size]
                masks = [_window_mask(rng, windows, config.window_sample_rate)
                         for _ in batch]
                jobs = [(train.images[i], int(train.labels[i]), mask)
                        for i, mask in zip(batch, masks)]
                call = lambda job: image_loss_and_gradient(model, *job)
                results = list(pool.map(call, jobs)) if pool else \
                    [call(job) for job in jobs]
                loss = np.mean([r[0] for r in results])
                grad = np.mean([r[1] for r in results], axis=0)
                if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                    raise NumericError(
                        'non-finite loss at epoch {} (loss={})'.format(
                            epoch, loss
                        )
                    )
                logger.debug('epoch %d batch loss %.6f |grad| %.3g', epoch,
                             loss, np.linalg.norm(grad))
                theta = optimizer_step(state, theta, grad)
                model = model.with_parameters(theta)
            for name, split in splits:
                accuracy, _ = evaluate_classifier(model, split)
                loss = dataset_loss(model, split)
                records.append({'epoch': epoch, 'split': name,
                                'loss': loss, 'accuracy': accuracy})
                logger.info('epoch %d %s loss %.4f accuracy %.4f', epoch,
                            name, loss, accuracy)
    finally:
        if pool is not None:
            pool.shutdown()
    return model, records


def _window_mask(rng, count, rate):
    if rate >= 1:
        return np.ones(count, dtype=bool)
    mask = rng.random(count) < rate
    if not mask.any():
        mask[rng.integers(count)] = True
    return mask


def noise_sweep(model, dataset, kind, parameters, placement=END_OF_CIRCUIT):
    """Accuracy of a trained model with a single channel on every qubit"""
    results = []
    for parameter in parameters:
        nm = NoiseModel.single(kind, parameter, placement)
        accuracy, _ = evaluate_classifier(model.with_noise(nm), dataset)
        logger.info('%s %.3g: accuracy %.4f', kind, parameter, accuracy)
        results.append((float(parameter), accuracy))
    return results


def classical_cnn_parameter_count(config):
    """Weights of a classical CNN with the same layer shapes"""
    q = config.qubits
    count = config.window1 ** 2 * q + q
    if config.second_conv:
        count += config.window2 ** 2 * q * q + q
    return count + config.num_features * config.num_classes + \
        config.num_classes


def parameter_report(config):
    kernel = config.layers * config.qubits * 6
    conv2 = kernel if config.second_conv else 0
    head = config.num_features * config.num_classes + config.num_classes
    return {
        'conv1': kernel,
        'conv2': conv2,
        'head': head,
        'total': kernel + conv2 + head,
        'classical_cnn': classical_cnn_parameter_count(config),
    }
