import setuptools

with open('README.md', encoding='utf-8') as f:
    readme = f.read()

setuptools.setup(
    name='pynv',
    version='0.1.0',
    description='Modelo de procesos electrón-fonón del centro NV en diamante.',
    long_description=readme,
    long_description_content_type='text/markdown',
    license='MIT',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Physics'],
    packages=['pynv', 'pynv.fitting'],
    package_data={'pynv': ['resources/*.json']},
    entry_points={'console_scripts': ['pynv = pynv.cli:main']},
    python_requires='>=3.7',
    install_requires=[
        'blessings',
        'logbook',
        'lxml',
        'numpy',
        'scipy'],
    extras_require={'test': ['pytest']},
)
