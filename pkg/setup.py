from setuptools import find_packages, setup

try:
    with open('README.md') as f:
        long_description = f.read()
except OSError:
    long_description = ''

setup(
    name='qvision',
    version='0.3.0',
    description='Quantum circuit simulation with noise, hybrid quantum '
                'convolution classifiers and patch quantum GANs',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=find_packages(where='src'),
    package_dir={'': 'src'},
    python_requires='>=3.8',
    install_requires=[
        'numpy < 2.0.0',
        'scipy',
    ],
    entry_points={
        'console_scripts': ['qvision = qvision.cli:main'],
    },
    license='MIT'
)
