#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Datasets and output files

IDX (MNIST / Fashion-MNIST) loading, desk-scale preprocessing, a synthetic
bars-and-stripes corpus, and the deterministic writers for PGM images,
metrics CSV and parameter checkpoints.
"""
import csv
import gzip
import io
import logging
import os
import shutil
import struct
import tempfile
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from qvision.errors import DataError, DimensionError, IdxFormatError
from qvision.gradients import ParamVector

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass
class ImageSet:
    images: np.ndarray
    labels: Optional[np.ndarray] = None
    num_classes: Optional[int] = None
    classes: Optional[Tuple[int, ...]] = None  # original label of each class

    def __post_init__(self):
        self.images = np.clip(np.asarray(self.images, dtype=float), 0.0, 1.0)
        if self.images.ndim != 3:
            raise DimensionError('images must have shape (count, H, W)')
        if self.labels is None:
            return
        self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if self.labels.shape[0] != self.images.shape[0]:
            raise DataError('{} labels for {} images'.format(
                self.labels.shape[0], self.images.shape[0]
            ))
        if self.num_classes is None:
            self.num_classes = int(self.labels.max()) + 1 \
                if self.labels.size else 0
        if self.labels.size and (self.labels.min() < 0 or
                                 self.labels.max() >= self.num_classes):
            raise DataError('labels outside 0..{}'.format(
                self.num_classes - 1
            ))
        if self.classes is None:
            self.classes = tuple(range(self.num_classes))

    def __len__(self):
        return self.images.shape[0]

    @property
    def count(self):
        return self.images.shape[0]

    @property
    def height(self):
        return self.images.shape[1]

    @property
    def width(self):
        return self.images.shape[2]

    def select(self, classes):
        """Keep the given original labels, renumbered 0..len(classes)-1"""
        if self.labels is None:
            raise DataError('dataset has no labels')
        classes = tuple(int(c) for c in classes)
        original = np.asarray(self.classes)[self.labels]
        keep = np.isin(original, classes)
        mapping = {c: i for i, c in enumerate(classes)}
        labels = np.array([mapping[c] for c in original[keep]], dtype=int)
        return ImageSet(self.images[keep], labels, len(classes), classes)

    def take(self, count):
        labels = None if self.labels is None else self.labels[:count]
        return ImageSet(self.images[:count], labels, self.num_classes,
                        self.classes)

    def map(self, fn):
        """Apply a per-image transform (crop, downsample, ...)"""
        if not len(self):
            return self
        images = np.stack([fn(img) for img in self.images])
        return ImageSet(images, self.labels, self.num_classes, self.classes)


# IDX

def _read_bytes(path):
    try:
        if str(path).endswith('.gz'):
            with gzip.open(path, 'rb') as fileh:
                return fileh.read()
        with open(path, 'rb') as fileh:
            return fileh.read()
    except FileNotFoundError:
        raise DataError('no such file: {}'.format(path)) from None
    except (OSError, EOFError) as err:
        raise IdxFormatError('{}: {}'.format(path, err)) from None


def _parse_idx(data, magic, ndim):
    header = 4 + 4 * ndim
    if len(data) < 4:
        raise IdxFormatError('truncated IDX header')
    (found,) = struct.unpack_from('>I', data, 0)
    if found != magic:
        raise IdxFormatError('bad magic 0x{:08x}, expected 0x{:08x}'.format(
            found, magic
        ))
    if len(data) < header:
        raise IdxFormatError('truncated IDX header')
    dims = struct.unpack_from('>{}I'.format(ndim), data, 4)
    expected = header + int(np.prod(dims, dtype=object))
    if len(data) < expected:
        raise IdxFormatError('truncated IDX payload: {} of {} bytes'.format(
            len(data), expected
        ))
    if len(data) > expected:
        raise IdxFormatError('{} trailing bytes after IDX payload'.format(
            len(data) - expected
        ))
    payload = np.frombuffer(data, dtype=np.uint8, offset=header)
    return payload.reshape(dims)


def parse_idx_images(data):
    """Images from IDX bytes, scaled byte/255 into [0, 1]"""
    return _parse_idx(data, IMAGE_MAGIC, 3).astype(float) / 255.0


def parse_idx_labels(data):
    return _parse_idx(data, LABEL_MAGIC, 1).astype(int)


def load_idx(images_path, labels_path=None, num_classes=None):
    """Load an IDX image file and optional label file (``.gz`` accepted).

    :raises IdxFormatError:
        On bad magic numbers, truncated or oversized files, or an image /
        label count mismatch
    """
    images = parse_idx_images(_read_bytes(images_path))
    labels = None
    if labels_path is not None:
        labels = parse_idx_labels(_read_bytes(labels_path))
        if labels.shape[0] != images.shape[0]:
            raise IdxFormatError('{} images but {} labels'.format(
                images.shape[0], labels.shape[0]
            ))
    logger.info('loaded %d images of %dx%d from %s', images.shape[0],
                images.shape[1], images.shape[2], images_path)
    if labels is not None and num_classes is None:
        num_classes = max(10, int(labels.max()) + 1) if labels.size else 10
    return ImageSet(images, labels, num_classes)


# Preprocessing

def downsample(img, factor):
    """Non-overlapping factor x factor mean pooling"""
    img = np.asarray(img, dtype=float)
    factor = int(factor)
    height, width = img.shape
    if factor < 1 or height % factor or width % factor:
        raise DimensionError('{}x{} image is not divisible by {}'.format(
            height, width, factor
        ))
    return img.reshape(height // factor, factor, width // factor,
                       factor).mean(axis=(1, 3))


def center_crop(img, side):
    img = np.asarray(img, dtype=float)
    height, width = img.shape
    if side > min(height, width):
        raise DimensionError('cannot crop {}x{} to {}'.format(
            height, width, side
        ))
    top = (height - side) // 2
    left = (width - side) // 2
    return img[top:top + side, left:left + side]


def bars_stripes_image(size, label, lines):
    """``label`` 0 lights the given rows (stripes), 1 the given columns"""
    img = np.zeros((size, size))
    if label == 0:
        img[list(lines), :] = 1.0
    else:
        img[:, list(lines)] = 1.0
    return img


def synth_bars_stripes(size, count, rng):
    """Random bars-and-stripes images, label 0 = stripes, 1 = bars"""
    if size < 2:
        raise DimensionError('bars and stripes need size >= 2')
    labels = rng.integers(0, 2, size=count)
    images = np.zeros((count, size, size))
    for i, label in enumerate(labels):
        lines = np.flatnonzero(rng.random(size) < 0.5)
        images[i] = bars_stripes_image(size, label, lines)
    return ImageSet(images, labels, 2)


# Writers

def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-')
        with os.fdopen(fd, 'w', newline='\n') as fileh:
            fileh.write(text)
        os.replace(tmp, path)
    except OSError as err:
        raise DataError('cannot write {}: {}'.format(path, err)) from None


def pgm_text(img):
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise DimensionError('PGM needs a 2-D image')
    if np.any(img < 0) or np.any(img > 1) or not np.all(np.isfinite(img)):
        raise DataError('pixels must lie in [0, 1]')
    values = np.floor(img * 255 + 0.5).astype(int)
    lines = ['P2', '{} {}'.format(img.shape[1], img.shape[0]), '255']
    lines += [' '.join(str(v) for v in row) for row in values]
    return '\n'.join(lines) + '\n'


def write_pgm(img, path):
    """ASCII PGM (P2, maxval 255), value = round(pixel * 255)"""
    _atomic_write(path, pgm_text(img))


def read_pgm(path):
    try:
        with open(path) as fileh:
            tokens = [t for line in fileh
                      for t in line.split('#', 1)[0].split()]
    except OSError as err:
        raise DataError('cannot read {}: {}'.format(path, err)) from None
    if len(tokens) < 4 or tokens[0] != 'P2':
        raise DataError('{} is not an ASCII PGM'.format(path))
    width, height, maxval = (int(t) for t in tokens[1:4])
    values = np.array([int(t) for t in tokens[4:]], dtype=float)
    if values.shape[0] != width * height:
        raise DataError('{} has {} pixels, expected {}'.format(
            path, values.shape[0], width * height
        ))
    return values.reshape(height, width) / maxval


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def metrics_text(records, fields=None, preamble=None):
    records = list(records)
    if fields is None:
        if not records:
            raise DataError('metrics without records need explicit fields')
        fields = list(records[0])
    buffer = io.StringIO()
    for key, value in (preamble or {}).items():
        buffer.write('# {} = {}\n'.format(key, format_value(value)))
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(fields)
    for record in records:
        if set(record) != set(fields):
            raise DataError('record fields {} differ from {}'.format(
                sorted(record), sorted(fields)
            ))
        writer.writerow([format_value(record[f]) for f in fields])
    return buffer.getvalue()


def write_metrics(records, path, fields=None, preamble=None):
    """CSV with a header row and one row per record (dicts).

    Reals are written with 17 significant digits and LF line endings, so
    identical records give identical bytes. ``preamble`` entries are written
    first as ``# key = value`` comment lines.
    """
    _atomic_write(path, metrics_text(records, fields, preamble))


def write_params(params, path):
    """Checkpoint as ``name = value`` lines"""
    lines = ['{} = {}'.format(name, format_value(value))
             for name, value in params.as_dict().items()]
    _atomic_write(path, '\n'.join(lines) + '\n')


def read_params(path):
    """Read a checkpoint back into a ParamVector"""
    names, values = [], []
    try:
        with open(path) as fileh:
            for lineno, line in enumerate(fileh, start=1):
                line = line.split('#', 1)[0].strip()
                if not line:
                    continue
                name, sep, value = line.partition('=')
                try:
                    if not sep:
                        raise ValueError(line)
                    values.append(float(value))
                except ValueError:
                    raise DataError('{}:{}: bad checkpoint line'.format(
                        path, lineno
                    )) from None
                names.append(name.strip())
    except OSError as err:
        raise DataError('cannot read {}: {}'.format(path, err)) from None
    return ParamVector(np.array(values), tuple(names))


class OutputDirectory(object):
    """Stage an output directory and publish it only on success.

    Files are written under a hidden sibling directory. Leaving the ``with``
    block normally replaces ``path`` with it; an exception removes it and
    leaves ``path`` untouched.

    ``path`` may be missing, empty, or a previous run (it holds
    ``config.echo``). Anything else is refused before work starts.
    """

    MARKER = 'config.echo'

    def __init__(self, path):
        self.path = os.path.abspath(path)
        self.staging = None

    def _check_target(self):
        if not os.path.lexists(self.path):
            return
        if not os.path.isdir(self.path) or os.path.islink(self.path):
            raise DataError('{} exists and is not a directory'.format(
                self.path
            ))
        entries = os.listdir(self.path)
        if entries and self.MARKER not in entries:
            raise DataError('{} is not empty and holds no {}; refusing to '
                            'replace it'.format(self.path, self.MARKER))

    def __enter__(self):
        self._check_target()
        parent = os.path.dirname(self.path)
        try:
            os.makedirs(parent, exist_ok=True)
            self.staging = tempfile.mkdtemp(
                prefix='.{}.'.format(os.path.basename(self.path)), dir=parent
            )
        except OSError as err:
            raise DataError('cannot create {}: {}'.format(
                self.path, err
            )) from None
        return self

    def file(self, *parts):
        path = os.path.join(self.staging, *parts)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        return path

    def __exit__(self, exc_type, exc_value, traceback):
        if exc_type is not None:
            shutil.rmtree(self.staging, ignore_errors=True)
            return False
        old = None
        try:
            self._check_target()
            if os.path.isdir(self.path):
                old = self.staging + '.old'
                os.replace(self.path, old)
            os.replace(self.staging, self.path)
        except (OSError, DataError) as err:
            if old is not None and not os.path.exists(self.path):
                os.replace(old, self.path)
                old = None
            shutil.rmtree(self.staging, ignore_errors=True)
            raise DataError('cannot publish {}: {}'.format(
                self.path, err
            )) from None
        finally:
            if old is not None:
                shutil.rmtree(old, ignore_errors=True)
        logger.info('wrote %s', self.path)
        return False
