from setuptools import setup, find_packages

setup(
    # Spatial-temporal attention for video person re-identification.
    name="stareid",
    version="1.0",
    license='Apache-2.0',

    # declare your packages
    packages=find_packages(where="src", exclude=("test", )),
    package_dir={"": "src"},

    # include data files (the ablation profiles)
    package_data={"": ["*.json"]},
    include_package_data=True,

    entry_points={'console_scripts': ['sta=stareid.main.cli:main']},

    install_requires=[
        'numpy >= 1.20',
        'scipy == 1.*',
        'pandas >= 1.0',
        'cmd2 >= 1.0',
    ],
    setup_requires=[
        'pytest-runner',
    ],
    tests_require=['pytest', 'pytest-cov'])
