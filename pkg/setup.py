from setuptools import setup, find_packages

setup(
    name="gramflow",
    version="1.1.0",
    description="gramflow is a python library for Tikhonov-regularised projected gradient flows in bilinear quantum control.",
    long_description=open('README.md').read(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=['tests']),
    install_requires=[r for r in open('requirements.txt').read().split('\n') if r and not r.startswith('pytest')],
    extras_require={'test': ['pytest>=4.3.0']},
    entry_points={'console_scripts': ['gramflow=gramflow.cli:main']},
    python_requires='>=3.6',
)
