"""Tests for the qvision command line"""
import io
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

from qvision.cli import parse_overrides, run
from qvision.errors import UsageError

BELL = 'qubits 2\nh 0\ncx 0 1\n'

TINY_CLASSIFIER = ['--size', '4', '--count', '40', '--test_limit', '8',
                   '--qubits', '2', '--layers', '1', '--second_conv', 'false',
                   '--epochs', '1']

TINY_GAN = ['--size', '4', '--count', '40', '--sub_generators', '1',
            '--depth', '1', '--iterations', '2', '--sample_every', '1',
            '--batch_size', '4']


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.tmp, *parts)

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = run(list(argv))
        return code, out.getvalue(), err.getvalue()

    def write(self, name, text):
        with open(self.path(name), 'w') as fileh:
            fileh.write(text)
        return self.path(name)

    def read(self, *parts):
        with open(self.path(*parts), 'rb') as fileh:
            return fileh.read()


class TestSim(CliTest):
    def test_bell(self):
        code, out, _ = self.run_cli('sim', self.write('bell.qc', BELL))
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines(), ['00 0.5', '11 0.5'])

    def test_observable(self):
        code, out, _ = self.run_cli('sim', self.write('bell.qc', BELL),
                                    '--observable', 'Z0 Z1')
        self.assertEqual(code, 0)
        self.assertTrue(out.splitlines()[-1].endswith('= 1'))

    def test_bind_and_noise(self):
        path = self.write('rot.qc', 'qubits 1\nparams t\nrx 0 t\n')
        code, out, _ = self.run_cli('sim', path, '--bind', 't=0',
                                    '--noise', 'bitflip:0.25')
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines(), ['0 0.75', '1 0.25'])

    def test_unknown_symbol(self):
        path = self.write('rot.qc', 'qubits 1\nparams t\nrx 0 t\n')
        code, _, _ = self.run_cli('sim', path, '--bind', 'u=1')
        self.assertEqual(code, 2)

    def test_unbound_symbol(self):
        path = self.write('rot.qc', 'qubits 1\nparams t u\nrx 0 t\nry 0 u\n')
        code, _, err = self.run_cli('sim', path, '--bind', 't=0')
        self.assertEqual(code, 2)
        self.assertIn('u', err)

    def test_missing_file(self):
        code, _, err = self.run_cli('sim', self.path('absent.qc'))
        self.assertEqual(code, 4)
        self.assertIn('absent.qc', err)

    def test_parse_error(self):
        code, _, _ = self.run_cli('sim', self.write('bad.qc', 'qubits 1\nfoo\n'))
        self.assertEqual(code, 4)


class TestUsage(CliTest):
    def test_exit_codes(self):
        self.assertEqual(self.run_cli('bogus')[0], 2)
        self.assertEqual(self.run_cli()[0], 2)
        self.assertEqual(self.run_cli('grad-check', '--threads', '0')[0], 2)
        self.assertEqual(self.run_cli('qpe-demo', '--phase', '1.5')[0], 2)
        self.assertEqual(self.run_cli('qpe-demo', '--depol', '2')[0], 2)
        self.assertEqual(self.run_cli('qpe-demo', '--extra', '1')[0], 2)

    def test_bad_config(self):
        code, _, _ = self.run_cli('report-params', '--classifier.qubits', 'x')
        self.assertEqual(code, 3)
        code, _, _ = self.run_cli('report-params', '--config',
                                  self.path('absent.ini'))
        self.assertEqual(code, 3)
        code, _, _ = self.run_cli('train-classifier', '--output',
                                  self.path('run'), '--noise.kind', 'bitflip',
                                  '--noise.parameter', '0.1',
                                  '--noise.qubits', '7', *TINY_CLASSIFIER)
        self.assertEqual(code, 3)
        self.assertFalse(os.path.exists(self.path('run')))

    def test_parse_overrides(self):
        self.assertEqual(parse_overrides(['--a', '1', '--b.c=2']),
                         [('a', '1'), ('b.c', '2')])
        with self.assertRaises(UsageError):
            parse_overrides(['--a'])
        with self.assertRaises(UsageError):
            parse_overrides(['stray'])


class TestDemos(CliTest):
    def test_qpe_csv(self):
        code, out, _ = self.run_cli('qpe-demo', '--depol', '0.05')
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], 'model,depolarizing,000,001,010,011,100,'
                                   '101,110,111')
        self.assertEqual(len(lines), 3)
        ideal = [float(v) for v in lines[1].split(',')[2:]]
        self.assertGreaterEqual(ideal[1], 0.999)
        noisy = [float(v) for v in lines[2].split(',')[2:]]
        self.assertLess(noisy[1], ideal[1])

    def test_qpe_file(self):
        target = self.path('qpe.csv')
        code, out, _ = self.run_cli('qpe-demo', '--output', target)
        self.assertEqual(code, 0)
        self.assertEqual(out, '')
        # ideal row and three default strengths
        self.assertEqual(len(self.read('qpe.csv').splitlines()), 5)

    def test_grad_check(self):
        code, out, _ = self.run_cli('grad-check', '--trials', '3')
        self.assertEqual(code, 0)
        self.assertIn('trials = 3', out)

    def test_report_params(self):
        code, out, _ = self.run_cli('report-params')
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertIn('classifier.total = 116', lines)
        self.assertIn('classifier.classical_cnn = 62', lines)
        self.assertIn('gan.generator = 120', lines)

    def test_report_ignores_run_flags(self):
        code, out, _ = self.run_cli('report-params', '--seed', '4',
                                    '--qubits', '2')
        self.assertEqual(code, 0)
        self.assertIn('classifier.conv1 = 36', out.splitlines())


class TestTraining(CliTest):
    def test_classifier_run(self):
        first = self.path('first')
        code, _, _ = self.run_cli('train-classifier', '--output', first,
                                  *TINY_CLASSIFIER)
        self.assertEqual(code, 0)
        self.assertEqual(sorted(os.listdir(first)),
                         ['checkpoint.txt', 'config.echo', 'metrics.csv'])
        metrics = self.read('first', 'metrics.csv').decode().splitlines()
        self.assertEqual(metrics[0], '# seed = 0')
        self.assertEqual(metrics[1], 'epoch,split,loss,accuracy')
        self.assertEqual([m.split(',')[1] for m in metrics[2:]],
                         ['train', 'test'])
        second = self.path('second')
        self.run_cli('train-classifier', '--output', second, *TINY_CLASSIFIER)
        for name in ('metrics.csv', 'checkpoint.txt'):
            self.assertEqual(self.read('first', name),
                             self.read('second', name))

    def test_classifier_sweep(self):
        out = self.path('sweep')
        code, _, _ = self.run_cli('train-classifier', '--output', out,
                                  '--damping_sweep', '0.5,1.0',
                                  *TINY_CLASSIFIER)
        self.assertEqual(code, 0)
        rows = self.read('sweep', 'noise_sweep.csv').decode().splitlines()
        self.assertEqual(rows[1], 'damping,accuracy')
        self.assertEqual([r.split(',')[0] for r in rows[2:]],
                         ['0', '0.5', '1'])

    def test_gan_run(self):
        out = self.path('gan')
        code, _, _ = self.run_cli('train-gan', '--output', out, *TINY_GAN)
        self.assertEqual(code, 0)
        self.assertEqual(sorted(os.listdir(self.path('gan', 'samples'))),
                         ['0001.pgm', '0002.pgm'])
        metrics = self.read('gan', 'metrics.csv').decode().splitlines()
        self.assertEqual(metrics[1], 'iteration,disc_loss,gen_loss,d_fake_mean')
        self.assertEqual(len(metrics), 4)
        self.assertTrue(self.read('gan', 'samples', '0001.pgm')
                        .startswith(b'P2\n4 4\n255\n'))

    def test_gan_reruns_identical(self):
        for name in ('first', 'second'):
            code, _, _ = self.run_cli('train-gan', '--output', self.path(name),
                                      '--seed', '3', *TINY_GAN)
            self.assertEqual(code, 0)
        for parts in (('metrics.csv',), ('checkpoint.txt',),
                      ('samples', '0001.pgm'), ('samples', '0002.pgm')):
            self.assertEqual(self.read('first', *parts),
                             self.read('second', *parts))

    def test_conditional_gan(self):
        out = self.path('cgan')
        code, _, _ = self.run_cli('train-gan', '--output', out, *TINY_GAN,
                                  '--count', '120', '--iterations', '1',
                                  '--conditional', 'true')
        self.assertEqual(code, 0)
        for label in (0, 1):
            self.assertTrue(os.path.isfile(
                self.path('cgan', 'class_{}'.format(label), 'metrics.csv')
            ))

    def test_output_keeps_user_directory(self):
        work = self.path('work')
        os.mkdir(work)
        self.write(os.path.join('work', 'precious.txt'), 'mine')
        code, _, err = self.run_cli('train-gan', '--output', work, *TINY_GAN)
        self.assertEqual(code, 4)
        self.assertIn('config.echo', err)
        self.assertEqual(os.listdir(work), ['precious.txt'])
        self.assertEqual(sorted(os.listdir(self.tmp)), ['work'])

    def test_output_rerun_replaces_run(self):
        out = self.path('gan')
        self.assertEqual(self.run_cli('train-gan', '--output', out,
                                      *TINY_GAN)[0], 0)
        first = self.read('gan', 'metrics.csv')
        self.assertEqual(self.run_cli('train-gan', '--output', out,
                                      *TINY_GAN)[0], 0)
        self.assertEqual(self.read('gan', 'metrics.csv'), first)
        self.assertEqual(sorted(os.listdir(self.tmp)), ['gan'])

    def test_gan_too_few_images(self):
        out = self.path('small')
        code, _, err = self.run_cli('train-gan', '--output', out, *TINY_GAN,
                                    '--count', '10')
        self.assertEqual(code, 4)
        self.assertIn('32', err)
        self.assertEqual(os.listdir(self.tmp), [])


if __name__ == "__main__":
    unittest.main()
