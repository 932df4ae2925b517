#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Patch quantum GAN

Each sub-generator is a small circuit over ``n_d`` data qubits and ``n_a``
ancilla qubits (the high qubits). The latent vector is encoded with ``ry``,
followed by ``D`` layers of trainable ``ry`` rotations and a linear CZ chain.
Post-selecting the ancillas on all-zeros leaves a distribution over the
``2**n_d`` data outcomes; divided by its maximum it becomes one image patch.
Patches are concatenated row-major into the image and judged by a classical
64/32 MLP discriminator.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit, log_expit

from qvision.channels import AFTER_EACH_LAYER, END_OF_CIRCUIT, NoiseModel
from qvision.channels import batch_apply_entries
from qvision.circuit import Circuit, Instruction
from qvision.errors import ConfigError, DataError, DimensionError, NumericError
from qvision.gradients import (
    ParamVector, OptimizerState, glorot_uniform, optimizer_step, shift_combine,
    shift_table,
)
from qvision.qstate import (
    MAX_DENSITY_QUBITS, MAX_QUBITS, batch_apply, batch_apply_dm,
    batch_dm_probabilities, batch_postselect, batch_probabilities,
    batch_to_density, batch_zero_states, cz_diagonal, ry,
)

logger = logging.getLogger(__name__)

LATENT_HIGH = np.pi / 2
HIDDEN_SIZES = (64, 32)
CLASSICAL_LATENT_DIM = 50


def chain_pairs(num_qubits):
    return [(q, q + 1) for q in range(num_qubits - 1)]


@dataclass
class SubGenerator:
    data_qubits: int
    ancilla_qubits: int
    depth: int
    weights: Optional[np.ndarray] = None  # (depth, qubits) ry angles

    def __post_init__(self):
        if self.data_qubits < 1 or self.ancilla_qubits < 0 or self.depth < 0:
            raise DimensionError('sub-generator needs data qubits and a '
                                 'non-negative depth')
        shape = (self.depth, self.num_qubits)
        if self.weights is None:
            self.weights = np.zeros(shape)
        self.weights = np.asarray(self.weights, dtype=float).reshape(shape)
        self._chain = cz_diagonal(chain_pairs(self.num_qubits),
                                  self.num_qubits)

    @property
    def num_qubits(self):
        return self.data_qubits + self.ancilla_qubits

    @property
    def patch_size(self):
        return 1 << self.data_qubits

    @property
    def num_parameters(self):
        return self.depth * self.num_qubits

    @property
    def ancillas(self):
        return tuple(range(self.data_qubits, self.num_qubits))

    def with_weights(self, weights):
        return replace(self, weights=np.array(weights, dtype=float))

    def to_circuit(self, z, weights=None):
        """The sub-generator as circuit IR with literal angles"""
        weights = self.weights if weights is None else \
            np.asarray(weights, dtype=float).reshape(self.weights.shape)
        n = self.num_qubits
        ins = [Instruction('ry', (q,), float(z[q])) for q in range(n)]
        for layer in range(self.depth):
            ins += [Instruction('ry', (q,), float(weights[layer, q]))
                    for q in range(n)]
            ins += [Instruction('cz', pair) for pair in chain_pairs(n)]
        return Circuit(n, tuple(ins))

    def probabilities(self, zs, weight_rows, nm=None):
        """Joint outcome probabilities for rows of latents and weights.

        ``zs`` is (batch, qubits), ``weight_rows`` (batch, depth * qubits).
        """
        n = self.num_qubits
        batch = zs.shape[0]
        weight_rows = weight_rows.reshape(batch, self.depth, n)
        nm = nm or NoiseModel()
        layer_noise = nm.at(AFTER_EACH_LAYER)
        end_noise = nm.at(END_OF_CIRCUIT)
        amps = batch_zero_states(batch, n)
        if layer_noise:
            rho = batch_to_density(amps)
            chain = self._chain[:, None] * self._chain.conj()[None, :]
        for q in range(n):
            if layer_noise:
                rho = batch_apply_dm(rho, ry(zs[:, q]), (q,), n)
            else:
                amps = batch_apply(amps, ry(zs[:, q]), (q,), n)
        for layer in range(self.depth):
            for q in range(n):
                u = ry(weight_rows[:, layer, q])
                if layer_noise:
                    rho = batch_apply_dm(rho, u, (q,), n)
                else:
                    amps = batch_apply(amps, u, (q,), n)
            if layer_noise:
                rho = batch_apply_entries(rho * chain, layer_noise, n)
            else:
                amps = amps * self._chain
        if layer_noise or end_noise:
            if not layer_noise:
                rho = batch_to_density(amps)
            return batch_dm_probabilities(
                batch_apply_entries(rho, end_noise, n)
            )
        return batch_probabilities(amps)

    def conditional(self, probs):
        """Data-qubit distribution given all ancillas read 0"""
        if not self.ancilla_qubits:
            return probs / probs.sum(axis=1, keepdims=True)
        conditional, _ = batch_postselect(
            probs, self.ancillas, (0,) * self.ancilla_qubits, self.num_qubits
        )
        return conditional

    def patches(self, zs, nm=None):
        zs = np.atleast_2d(zs)
        rows = np.broadcast_to(self.weights.reshape(1, -1),
                               (zs.shape[0], self.num_parameters))
        return normalize_patches(self.conditional(
            self.probabilities(zs, rows, nm)
        ))

    def patches_with_jacobian(self, zs, nm=None):
        """Patches (batch, 2**n_d) and d patch / d weights (batch, P, 2**n_d).

        Raw outcome probabilities are differentiated with the shift rule.
        Post-selection and max-normalization are chained analytically with
        the position of each patch maximum held fixed.
        """
        zs = np.atleast_2d(zs)
        batch = zs.shape[0]
        count = self.num_parameters
        table = shift_table(np.broadcast_to(self.weights.reshape(1, -1),
                                            (batch, count)))
        rows = np.repeat(zs, 2 * count + 1, axis=0)
        probs = self.probabilities(rows, table, nm)
        base, jacobian = shift_combine(probs, count)
        patch = normalize_patches(self.conditional(base))
        # ancillas are the high qubits, so ancilla = 0 is the leading block;
        # the post-selection denominator cancels against the maximum
        kept = base[:, :self.patch_size]
        d_kept = jacobian[..., :self.patch_size]
        top = np.argmax(kept, axis=1)
        peak = kept[np.arange(batch), top]
        d_peak = d_kept[np.arange(batch), :, top]
        d_patch = (d_kept * peak[:, None, None] -
                   kept[:, None, :] * d_peak[:, :, None]) / \
            (peak ** 2)[:, None, None]
        return patch, d_patch


def normalize_patches(conditional):
    peak = conditional.max(axis=1, keepdims=True)
    return conditional / peak


def generate_patch(sg, z, weights=None, nm=None):
    """One patch of ``2**n_d`` pixels in [0, 1] with maximum exactly 1"""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != sg.num_qubits:
        raise DimensionError('latent of length {} for {} qubits'.format(
            z.shape[0], sg.num_qubits
        ))
    if weights is not None:
        sg = sg.with_weights(weights)
    return sg.patches(z[None], nm)[0]


@dataclass
class PatchGenerator:
    sub_generators: List[SubGenerator]
    image_height: int
    image_width: int

    def __post_init__(self):
        if not self.sub_generators:
            raise DimensionError('a patch generator needs sub-generators')
        first = self.sub_generators[0]
        for sg in self.sub_generators:
            if sg.num_qubits != first.num_qubits or \
                    sg.patch_size != first.patch_size:
                raise DimensionError('sub-generators differ in shape')
        if self.num_pixels < self.image_height * self.image_width:
            raise DimensionError(
                '{} patches of {} pixels cannot fill {}x{}'.format(
                    len(self.sub_generators), first.patch_size,
                    self.image_height, self.image_width
                )
            )

    @property
    def latent_dim(self):
        return self.sub_generators[0].num_qubits

    @property
    def num_pixels(self):
        return sum(sg.patch_size for sg in self.sub_generators)

    @property
    def num_parameters(self):
        return sum(sg.num_parameters for sg in self.sub_generators)

    def parameters(self):
        names = tuple(
            'g{}.l{}.q{}'.format(s, layer, q)
            for s, sg in enumerate(self.sub_generators)
            for layer in range(sg.depth)
            for q in range(sg.num_qubits)
        )
        values = [sg.weights.ravel() for sg in self.sub_generators]
        return ParamVector(np.concatenate(values) if values else [], names)

    def with_parameters(self, theta):
        values = theta.values if isinstance(theta, ParamVector) else \
            np.asarray(theta, dtype=float)
        if values.shape[0] != self.num_parameters:
            raise DimensionError('{} values for {} parameters'.format(
                values.shape[0], self.num_parameters
            ))
        subs, offset = [], 0
        for sg in self.sub_generators:
            subs.append(sg.with_weights(
                values[offset:offset + sg.num_parameters]
            ))
            offset += sg.num_parameters
        return replace(self, sub_generators=subs)

    def assemble(self, patches):
        """Concatenate (batch, pixels) patch blocks into (batch, H, W)"""
        flat = np.concatenate(patches, axis=1)
        pixels = self.image_height * self.image_width
        return flat[:, :pixels].reshape(-1, self.image_height,
                                        self.image_width)

    def sample_latent(self, rng, batch):
        return rng.uniform(0, LATENT_HIGH, size=(batch, self.latent_dim))


def generate_image(g, z, weights=None, nm=None):
    """An H x W image: sub-generator patches in order, surplus dropped"""
    if weights is not None:
        g = g.with_parameters(weights)
    z = np.asarray(z, dtype=float).reshape(1, -1)
    if z.shape[1] != g.latent_dim:
        raise DimensionError('latent of length {} for {} qubits'.format(
            z.shape[1], g.latent_dim
        ))
    return g.assemble([sg.patches(z, nm) for sg in g.sub_generators])[0]


@dataclass
class Discriminator:
    """``input -> 64 -> 32 -> 1`` MLP with ReLU hidden units"""
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    @staticmethod
    def create(num_inputs, rng=None, hidden=HIDDEN_SIZES):
        sizes = (num_inputs,) + tuple(hidden) + (1,)
        pairs = list(zip(sizes[:-1], sizes[1:]))
        if rng is None:
            weights = tuple(np.zeros(p) for p in pairs)
        else:
            weights = tuple(glorot_uniform(rng, *p) for p in pairs)
        return Discriminator(weights, tuple(np.zeros(p[1]) for p in pairs))

    @property
    def num_inputs(self):
        return self.weights[0].shape[0]

    @property
    def num_parameters(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self):
        names, values = [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            names += ['d{}.w.{}.{}'.format(i, r, c)
                      for r in range(w.shape[0]) for c in range(w.shape[1])]
            names += ['d{}.b.{}'.format(i, c) for c in range(b.shape[0])]
            values += [w.ravel(), b]
        return ParamVector(np.concatenate(values), tuple(names))

    def with_parameters(self, theta):
        values = theta.values if isinstance(theta, ParamVector) else \
            np.asarray(theta, dtype=float)
        if values.shape[0] != self.num_parameters:
            raise DimensionError('{} values for {} parameters'.format(
                values.shape[0], self.num_parameters
            ))
        weights, biases, offset = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(values[offset:offset + w.size].reshape(w.shape))
            offset += w.size
            biases.append(values[offset:offset + b.size].copy())
            offset += b.size
        return Discriminator(tuple(weights), tuple(biases))

    def logits(self, x):
        """Pre-sigmoid outputs (batch,) and the activations for backward"""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.num_inputs:
            raise DimensionError('{} inputs for a discriminator of {}'.format(
                x.shape[1], self.num_inputs
            ))
        activations = [x]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w + b
            if i < len(self.weights) - 1:
                x = np.maximum(x, 0)
            activations.append(x)
        return x[:, 0], activations

    def backward(self, activations, d_logits):
        """Gradient over ``parameters()`` and over the inputs"""
        delta = d_logits[:, None]
        grads = []
        for i in reversed(range(len(self.weights))):
            if i < len(self.weights) - 1:
                delta = delta * (activations[i + 1] > 0)
            grads.append((activations[i].T @ delta, delta.sum(axis=0)))
            delta = delta @ self.weights[i].T
        flat = []
        for d_w, d_b in reversed(grads):
            flat += [d_w.ravel(), d_b]
        return np.concatenate(flat), delta


def discriminator_forward(d, image):
    """D(image) in (0, 1)"""
    flat = np.asarray(image, dtype=float).reshape(1, -1)
    logits, _ = d.logits(flat)
    return float(expit(logits[0]))


def discriminator_loss(d, real, fake):
    """Mean of -[log D(real) + log(1 - D(fake))] and its gradient"""
    batch = real.shape[0]
    real_logits, real_acts = d.logits(real)
    fake_logits, fake_acts = d.logits(fake)
    loss = -np.mean(log_expit(real_logits) + log_expit(-fake_logits))
    grad_real, _ = d.backward(real_acts, (expit(real_logits) - 1) / batch)
    grad_fake, _ = d.backward(fake_acts, expit(fake_logits) / batch)
    return float(loss), grad_real + grad_fake


def generator_loss(d, fake):
    """Mean of -log D(fake), d loss / d fake pixels and mean D(fake)"""
    batch = fake.shape[0]
    logits, acts = d.logits(fake)
    loss = -np.mean(log_expit(logits))
    _, d_input = d.backward(acts, (expit(logits) - 1) / batch)
    return float(loss), d_input, float(np.mean(expit(logits)))


@dataclass
class GanConfig:
    image_height: int = 8
    image_width: int = 8
    sub_generators: int = 4
    data_qubits: int = 4
    ancilla_qubits: int = 1
    depth: int = 6
    iterations: int = 300
    batch_size: int = 8
    generator_lr: float = 2e-4
    discriminator_lr: float = 2e-4
    optimizer: str = 'adaptive'
    sample_every: int = 50
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0

    @property
    def num_qubits(self):
        return self.data_qubits + self.ancilla_qubits

    def validate(self):
        if self.sub_generators < 1 or self.data_qubits < 1 or \
                self.ancilla_qubits < 0 or self.depth < 0:
            raise ConfigError('sub-generator shape must be positive')
        limit = MAX_DENSITY_QUBITS if self.noise else MAX_QUBITS
        if self.num_qubits > limit:
            raise ConfigError('{} qubits per sub-generator exceed {}'.format(
                self.num_qubits, limit
            ))
        if self.sub_generators * (1 << self.data_qubits) < \
                self.image_height * self.image_width:
            raise ConfigError(
                '{} sub-generators of {} pixels cannot fill {}x{}'.format(
                    self.sub_generators, 1 << self.data_qubits,
                    self.image_height, self.image_width
                )
            )
        if self.batch_size < 1 or self.iterations < 0:
            raise ConfigError('batch_size must be positive')
        if self.sample_every < 0:
            raise ConfigError('sample_every must not be negative')
        return self


def init_gan(config, rng):
    """Generator angles from U(-pi, pi), discriminator Glorot uniform"""
    config.validate()
    shape = (config.depth, config.num_qubits)
    subs = [SubGenerator(config.data_qubits, config.ancilla_qubits,
                         config.depth, rng.uniform(-np.pi, np.pi, size=shape))
            for _ in range(config.sub_generators)]
    g = PatchGenerator(subs, config.image_height, config.image_width)
    d = Discriminator.create(config.image_height * config.image_width, rng)
    return g, d


@dataclass
class GanOptimizers:
    generator: OptimizerState
    discriminator: OptimizerState

    @staticmethod
    def create(config=None):
        config = config or GanConfig()
        return GanOptimizers(
            OptimizerState(config.optimizer, config.generator_lr),
            OptimizerState(config.optimizer, config.discriminator_lr),
        )


@dataclass
class StepResult:
    disc_loss: float
    gen_loss: float
    d_fake_mean: float
    generator: PatchGenerator
    discriminator: Discriminator


def _patch_jacobians(g, zs, nm, pool):
    call = lambda sg: sg.patches_with_jacobian(zs, nm)
    if pool is None:
        return [call(sg) for sg in g.sub_generators]
    return list(pool.map(call, g.sub_generators))


def gan_train_step(g, d, real_batch, rng, optimizers=None, nm=None,
                   pool=None):
    """One discriminator step followed by one generator step.

    The fake batch is drawn once and reused by both steps; the generator
    step scores it with the freshly updated discriminator.

    :raises NumericError:
        If a loss or gradient turns non-finite
    """
    real = np.asarray(real_batch, dtype=float)
    if not real.shape[0]:
        raise DataError('empty real batch')
    real = real.reshape(real.shape[0], -1)
    optimizers = optimizers or GanOptimizers.create()
    zs = g.sample_latent(rng, real.shape[0])
    results = _patch_jacobians(g, zs, nm, pool)
    fake = g.assemble([patch for patch, _ in results]).reshape(zs.shape[0], -1)

    disc_loss, d_grad = discriminator_loss(d, real, fake)
    if not np.isfinite(disc_loss):
        raise NumericError('non-finite discriminator loss {}'.format(
            disc_loss
        ))
    d = d.with_parameters(optimizer_step(optimizers.discriminator,
                                         d.parameters(), d_grad))

    gen_loss, d_fake, d_fake_mean = generator_loss(d, fake)
    if not np.isfinite(gen_loss):
        raise NumericError('non-finite generator loss {}'.format(gen_loss))
    pixels = fake.shape[1]
    grads, offset = [], 0
    for sg, (_, jacobian) in zip(g.sub_generators, results):
        stop = min(offset + sg.patch_size, pixels)
        used = stop - offset
        if used > 0:
            grads.append(np.einsum('bpi,bi->p', jacobian[..., :used],
                                   d_fake[:, offset:stop]))
        else:
            grads.append(np.zeros(sg.num_parameters))
        offset += sg.patch_size
    g_grad = np.concatenate(grads) if grads else np.zeros(0)
    g = g.with_parameters(optimizer_step(optimizers.generator,
                                         g.parameters(), g_grad))
    logger.debug('disc %.5f gen %.5f D(fake) %.4f', disc_loss, gen_loss,
                 d_fake_mean)
    return StepResult(disc_loss, gen_loss, d_fake_mean, g, d)


def train_gan(dataset, config, threads=1):
    """Adversarial training on the images of ``dataset``.

    :returns:
        ``(generator, discriminator, records, samples)`` where ``records``
        holds one ``{iteration, disc_loss, gen_loss, d_fake_mean}`` dict per
        iteration and ``samples`` lists ``(iteration, image)`` dumps taken
        every ``sample_every`` iterations from a fixed latent vector
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    g, d = init_gan(config, rng)
    if config.iterations == 0:
        return g, d, [], []
    if dataset is None or len(dataset) < 32:
        raise DataError('GAN training needs at least 32 images, got {}'.format(
            0 if dataset is None else len(dataset)
        ))
    if (dataset.height, dataset.width) != (config.image_height,
                                           config.image_width):
        raise DataError('images are {}x{}, generator makes {}x{}'.format(
            dataset.height, dataset.width, config.image_height,
            config.image_width
        ))
    images = dataset.images.reshape(len(dataset), -1)
    optimizers = GanOptimizers.create(config)
    fixed = g.sample_latent(rng, 1)
    batch = min(config.batch_size, len(dataset))
    records, samples = [], []
    pool = ThreadPoolExecutor(max_workers=threads,
                              thread_name_prefix='qvision') \
        if threads > 1 else None
    try:
        for iteration in range(1, config.iterations + 1):
            real = images[rng.choice(len(images), batch, replace=False)]
            step = gan_train_step(g, d, real, rng, optimizers, config.noise,
                                  pool)
            g, d = step.generator, step.discriminator
            records.append({'iteration': iteration,
                            'disc_loss': step.disc_loss,
                            'gen_loss': step.gen_loss,
                            'd_fake_mean': step.d_fake_mean})
            if config.sample_every and iteration % config.sample_every == 0:
                samples.append((iteration,
                                generate_image(g, fixed[0], nm=config.noise)))
                logger.info('iteration %d disc %.4f gen %.4f D(fake) %.3f',
                            iteration, step.disc_loss, step.gen_loss,
                            step.d_fake_mean)
    finally:
        if pool is not None:
            pool.shutdown()
    return g, d, records, samples


def classical_generator_parameter_count(latent_dim, height, width,
                                        channels=(8, 4), kernel=4):
    """Weights of the transposed-convolution generator baseline.

    A dense layer maps the latent vector onto ``channels[0]`` maps at a
    quarter of the image size; two stride-2 transposed convolutions bring it
    to ``channels[1]`` maps and then to the single output map.
    """
    seed = -(-height // 4) * -(-width // 4)
    first, second = channels
    dense = latent_dim * first * seed + first * seed
    up1 = first * second * kernel * kernel + second
    up2 = second * kernel * kernel + 1
    return dense + up1 + up2


def parameter_report(config):
    generator = config.sub_generators * config.depth * config.num_qubits
    d = Discriminator.create(config.image_height * config.image_width)
    return {
        'generator': generator,
        'discriminator': d.num_parameters,
        'classical_generator': classical_generator_parameter_count(
            CLASSICAL_LATENT_DIM, config.image_height, config.image_width
        ),
    }
