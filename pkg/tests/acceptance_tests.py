"""Desk-scale training experiments

These take minutes and only run with ``QVISION_SLOW=1``. The classifier
experiments need MNIST in IDX form: set ``QVISION_MNIST`` to the directory
holding ``train-images-idx3-ubyte`` (optionally ``.gz``) and its siblings.
"""
import os
import unittest

import numpy as np

from qvision.channels import NoiseModel
from qvision.classifier import evaluate_classifier, train_classifier
from qvision.cli import load_datasets
from qvision.config import RunConfig
from qvision.dataio import ImageSet, synth_bars_stripes
from qvision.qgan import GanConfig, generate_image, train_gan

SLOW = os.getenv('QVISION_SLOW') == '1'
MNIST = os.getenv('QVISION_MNIST', '')

IDX_FILES = {
    'images': 'train-images-idx3-ubyte',
    'labels': 'train-labels-idx1-ubyte',
    'test_images': 't10k-images-idx3-ubyte',
    'test_labels': 't10k-labels-idx1-ubyte',
}


def mnist_overrides():
    overrides = [('data.kind', 'idx')]
    for key, name in IDX_FILES.items():
        path = os.path.join(MNIST, name)
        if not os.path.exists(path):
            path += '.gz'
        overrides.append(('data.' + key, path))
    return overrides


def have_mnist():
    if not MNIST:
        return False
    return all(os.path.exists(path) for _, path in mnist_overrides()[1:])


@unittest.skipUnless(SLOW, 'set QVISION_SLOW=1 to run desk experiments')
@unittest.skipUnless(SLOW and have_mnist(), 'set QVISION_MNIST to the IDX files')
class TestDeskClassifier(unittest.TestCase):
    def desk_run(self, *overrides):
        cfg = RunConfig.load('train-classifier',
                             overrides=mnist_overrides() + list(overrides))
        train, test = load_datasets(cfg)
        config = cfg.classifier_config(train.height, train.width)
        model, records = train_classifier(train, config, test)
        return model, test, records

    def test_binary_accuracy(self):
        model, test, records = self.desk_run()
        accuracy, _ = evaluate_classifier(model, test)
        self.assertGreaterEqual(accuracy, 0.90)
        _, _, again = self.desk_run()
        self.assertEqual(records, again)

    def test_more_layers_help(self):
        means = []
        for layers in (1, 4):
            runs = [self.desk_run(('layers', str(layers)),
                                  ('run.seed', str(seed)))
                    for seed in range(3)]
            means.append(np.mean([evaluate_classifier(m, t)[0]
                                  for m, t, _ in runs]))
        self.assertGreaterEqual(means[1], means[0])

    def test_flip_noise_robustness(self):
        model, test, _ = self.desk_run()
        ideal, _ = evaluate_classifier(model, test)
        noisy, _ = evaluate_classifier(model.with_noise(NoiseModel.flip(0.1)),
                                       test)
        self.assertLessEqual(ideal - noisy, 0.10)


def fake_tail_mean(records):
    return np.mean([r['d_fake_mean'] for r in records[-50:]])


def mean_image_correlation(g, train):
    zs = g.sample_latent(np.random.default_rng(1), 64)
    generated = np.mean([generate_image(g, z) for z in zs], axis=0)
    target = train.images.mean(axis=0)
    return np.corrcoef(generated.ravel(), target.ravel())[0, 1]


@unittest.skipUnless(SLOW, 'set QVISION_SLOW=1 to run desk experiments')
class TestDeskGan(unittest.TestCase):
    def test_bars_stripes_equilibrium(self):
        data = synth_bars_stripes(4, 256, np.random.default_rng(0))
        config = GanConfig(image_height=4, image_width=4, iterations=300,
                           sample_every=0)
        _, _, records, _ = train_gan(data, config)
        self.assertTrue(0.35 <= fake_tail_mean(records) <= 0.65)

    def test_bars_stripes_mean_image(self):
        # the full set averages to a flat image; a lit top row gives the
        # mean some structure to correlate with
        data = synth_bars_stripes(4, 1024, np.random.default_rng(0))
        keep = (data.labels == 0) & (data.images[:, 0, 0] == 1)
        train = ImageSet(data.images[keep], np.zeros(keep.sum(), dtype=int), 1)
        config = GanConfig(image_height=4, image_width=4, iterations=300,
                           sample_every=0)
        g, _, records, _ = train_gan(train, config)
        self.assertTrue(0.35 <= fake_tail_mean(records) <= 0.65)
        self.assertGreaterEqual(mean_image_correlation(g, train), 0.5)

    @unittest.skipUnless(SLOW and have_mnist(),
                         'set QVISION_MNIST to the IDX files')
    def test_mnist_zeros(self):
        cfg = RunConfig.load('train-gan', overrides=mnist_overrides() + [
            ('data.classes', '0'), ('sample_every', '0'),
        ])
        train, _ = load_datasets(cfg)
        g, _, records, _ = train_gan(train, cfg.gan_config(8, 8))
        self.assertTrue(0.35 <= fake_tail_mean(records) <= 0.65)
        self.assertGreaterEqual(mean_image_correlation(g, train), 0.5)


if __name__ == "__main__":
    unittest.main()
