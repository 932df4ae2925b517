"""Tests for dataset loading, preprocessing and the output writers"""
import gzip
import os
import struct
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose

from qvision.dataio import (
    IMAGE_MAGIC, LABEL_MAGIC, ImageSet, OutputDirectory, bars_stripes_image,
    center_crop, downsample, load_idx, metrics_text, parse_idx_images,
    parse_idx_labels, pgm_text, read_params, read_pgm, synth_bars_stripes,
    write_metrics, write_params, write_pgm,
)
from qvision.errors import DataError, DimensionError, IdxFormatError
from qvision.gradients import ParamVector


def idx_images(pixels):
    pixels = np.asarray(pixels, dtype=np.uint8)
    return struct.pack('>4I', IMAGE_MAGIC, *pixels.shape) + pixels.tobytes()


def idx_labels(labels):
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack('>2I', LABEL_MAGIC, labels.shape[0]) + labels.tobytes()


class TempDirTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.tmp, *parts)

    def write_bytes(self, name, data):
        with open(self.path(name), 'wb') as fileh:
            fileh.write(data)
        return self.path(name)


class TestIdx(TempDirTest):
    def test_single_image(self):
        images = self.write_bytes('img', idx_images([[[0, 255], [0, 255]]]))
        data = load_idx(images)
        self.assertEqual(len(data), 1)
        assert_allclose(data.images[0], [[0, 1], [0, 1]])
        self.assertIsNone(data.labels)

    def test_labels_and_gzip(self):
        pixels = np.arange(2 * 3 * 3).reshape(2, 3, 3)
        with gzip.open(self.path('img.gz'), 'wb') as fileh:
            fileh.write(idx_images(pixels))
        labels = self.write_bytes('lbl', idx_labels([3, 7]))
        data = load_idx(self.path('img.gz'), labels)
        self.assertEqual(list(data.labels), [3, 7])
        self.assertEqual(data.num_classes, 10)
        assert_allclose(data.images[1, 0, 0], 9 / 255)

    def test_bad_magic(self):
        images = self.write_bytes('img', idx_images([[[0]]]))
        wrong = self.write_bytes('lbl', idx_images([[[0]]]))
        with self.assertRaises(IdxFormatError):
            load_idx(images, wrong)

    def test_count_mismatch(self):
        images = self.write_bytes('img', idx_images(np.zeros((2, 2, 2))))
        labels = self.write_bytes('lbl', idx_labels([1]))
        with self.assertRaises(IdxFormatError):
            load_idx(images, labels)

    def test_truncated_and_trailing(self):
        data = idx_images(np.ones((2, 2, 2)))
        with self.assertRaises(IdxFormatError):
            parse_idx_images(data[:-1])
        with self.assertRaises(IdxFormatError):
            parse_idx_images(data + b'\x00')
        with self.assertRaises(IdxFormatError):
            parse_idx_images(data[:6])

    def test_missing_file(self):
        with self.assertRaises(DataError):
            load_idx(self.path('nothing'))

    def test_fuzz(self):
        """Malformed inputs give typed errors only"""
        rng = np.random.default_rng(4)
        valid = idx_images(rng.integers(0, 256, size=(3, 4, 4)))
        labels = idx_labels([1, 2, 3])
        for _ in range(1000):
            choice = rng.integers(4)
            if choice == 0:
                data = bytes(rng.integers(0, 256, rng.integers(0, 40)).astype(
                    np.uint8))
            elif choice == 1:
                data = valid[:rng.integers(0, len(valid))]
            elif choice == 2:
                data = bytearray(valid)
                data[rng.integers(0, 16)] = rng.integers(0, 256)
                data = bytes(data)
            else:
                data = labels + bytes(rng.integers(1, 5))
            for parse in (parse_idx_images, parse_idx_labels):
                try:
                    parse(data)
                except IdxFormatError:
                    pass


class TestPreprocessing(unittest.TestCase):
    def test_downsample(self):
        assert_allclose(downsample([[0, 1], [1, 0]], 2), [[0.5]])
        img = np.random.default_rng(0).random((6, 6))
        assert_allclose(downsample(img, 1), img)
        assert_allclose(downsample(np.full((4, 4), 0.3), 2),
                        np.full((2, 2), 0.3))
        self.assertAlmostEqual(downsample(img, 3).mean(), img.mean(),
                               delta=1e-12)
        with self.assertRaises(DimensionError):
            downsample(img, 4)

    def test_center_crop(self):
        img = np.arange(36.0).reshape(6, 6)
        assert_allclose(center_crop(img, 2), [[14, 15], [20, 21]])
        with self.assertRaises(DimensionError):
            center_crop(img, 7)

    def test_bars_stripes(self):
        assert_allclose(bars_stripes_image(2, 0, [0]), [[1, 1], [0, 0]])
        assert_allclose(bars_stripes_image(2, 1, [1]), [[0, 1], [0, 1]])
        data = synth_bars_stripes(4, 50, np.random.default_rng(1))
        for img, label in zip(data.images, data.labels):
            if label == 0:
                self.assertTrue(np.all(img == img[:, :1]))
            else:
                self.assertTrue(np.all(img == img[:1, :]))

    def test_bars_stripes_balance(self):
        data = synth_bars_stripes(3, 1000, np.random.default_rng(2))
        # binomial(1000, 1/2) 99% interval
        self.assertTrue(459 <= int(data.labels.sum()) <= 541)

    def test_bars_stripes_size(self):
        with self.assertRaises(DimensionError):
            synth_bars_stripes(1, 10, np.random.default_rng(0))


class TestImageSet(unittest.TestCase):
    def test_select_renumbers(self):
        data = ImageSet(np.zeros((4, 2, 2)), [3, 1, 3, 7], 10)
        picked = data.select([3, 7])
        self.assertEqual(list(picked.labels), [0, 0, 1])
        self.assertEqual(picked.classes, (3, 7))
        self.assertEqual(picked.num_classes, 2)
        self.assertEqual(len(picked.take(2)), 2)

    def test_validation(self):
        with self.assertRaises(DataError):
            ImageSet(np.zeros((2, 2, 2)), [0])
        with self.assertRaises(DataError):
            ImageSet(np.zeros((1, 2, 2)), [2], 2)
        clipped = ImageSet(np.full((1, 1, 1), 1.5))
        self.assertEqual(clipped.images[0, 0, 0], 1.0)


class TestWriters(TempDirTest):
    def test_pgm_format(self):
        self.assertEqual(pgm_text(np.ones((1, 1))), 'P2\n1 1\n255\n255\n')
        self.assertTrue(pgm_text(np.zeros((1, 1))).endswith('\n0\n'))
        self.assertEqual(pgm_text([[0.0, 0.5, 1.0]]),
                         'P2\n3 1\n255\n0 128 255\n')

    def test_pgm_round_trip(self):
        img = np.random.default_rng(3).random((3, 5))
        write_pgm(img, self.path('a.pgm'))
        back = read_pgm(self.path('a.pgm'))
        self.assertEqual(back.shape, (3, 5))
        self.assertLessEqual(np.max(np.abs(back - img)), 1 / 255)

    def test_pgm_range(self):
        with self.assertRaises(DataError):
            pgm_text([[1.2]])

    def test_metrics(self):
        self.assertEqual(metrics_text([], ['epoch', 'loss']), 'epoch,loss\n')
        records = [{'epoch': 1, 'loss': 0.1}, {'epoch': 2, 'loss': 1 / 3}]
        write_metrics(records, self.path('a.csv'), preamble={'seed': 5})
        write_metrics(records, self.path('b.csv'), preamble={'seed': 5})
        with open(self.path('a.csv'), 'rb') as a, \
                open(self.path('b.csv'), 'rb') as b:
            first, second = a.read(), b.read()
        self.assertEqual(first, second)
        lines = first.decode().split('\n')
        self.assertEqual(lines[0], '# seed = 5')
        self.assertEqual(lines[1], 'epoch,loss')
        self.assertEqual(lines[3], '2,0.33333333333333331')
        self.assertNotIn(b'\r', first)
        self.assertEqual(len(metrics_text(records).splitlines()),
                         len(records) + 1)

    def test_metrics_heterogeneous(self):
        with self.assertRaises(DataError):
            metrics_text([{'a': 1}, {'b': 2}])

    def test_params_round_trip(self):
        params = ParamVector([0.1, -2 / 3, 1e-20], ('a.w', 'a.b', 'c'))
        write_params(params, self.path('ckpt.txt'))
        back = read_params(self.path('ckpt.txt'))
        self.assertEqual(back.names, params.names)
        self.assertEqual(list(back.values), list(params.values))

    def test_output_directory_publishes(self):
        target = self.path('run')
        with OutputDirectory(target) as out:
            write_metrics([], out.file('metrics.csv'), ['x'])
            write_pgm(np.zeros((1, 1)), out.file('samples', '0001.pgm'))
            self.assertFalse(os.path.exists(target))
        self.assertTrue(os.path.isfile(os.path.join(target, 'metrics.csv')))
        self.assertTrue(os.path.isfile(
            os.path.join(target, 'samples', '0001.pgm')
        ))
        self.assertEqual(sorted(os.listdir(self.tmp)), ['run'])

    def test_output_directory_discards_on_error(self):
        target = self.path('run')
        with self.assertRaises(RuntimeError):
            with OutputDirectory(target) as out:
                write_metrics([], out.file('metrics.csv'), ['x'])
                raise RuntimeError('boom')
        self.assertEqual(os.listdir(self.tmp), [])

    def test_output_directory_keeps_foreign_files(self):
        target = self.path('work')
        os.mkdir(target)
        with open(os.path.join(target, 'notes.txt'), 'w') as fileh:
            fileh.write('keep me')
        with self.assertRaises(DataError):
            with OutputDirectory(target) as out:
                write_metrics([], out.file('metrics.csv'), ['x'])
        self.assertEqual(os.listdir(target), ['notes.txt'])
        self.assertEqual(os.listdir(self.tmp), ['work'])

    def test_output_directory_replaces_previous_run(self):
        target = self.path('run')
        with OutputDirectory(target) as out:
            with open(out.file('config.echo'), 'w') as fileh:
                fileh.write('# first\n')
            write_metrics([], out.file('old.csv'), ['x'])
        with OutputDirectory(target) as out:
            with open(out.file('config.echo'), 'w') as fileh:
                fileh.write('# second\n')
        self.assertEqual(os.listdir(target), ['config.echo'])
        with open(os.path.join(target, 'config.echo')) as fileh:
            self.assertEqual(fileh.read(), '# second\n')
        self.assertEqual(os.listdir(self.tmp), ['run'])

    def test_output_directory_rejects_file(self):
        target = self.write_bytes('run', b'data')
        with self.assertRaises(DataError):
            OutputDirectory(target).__enter__()
        with open(target, 'rb') as fileh:
            self.assertEqual(fileh.read(), b'data')


if __name__ == "__main__":
    unittest.main()
