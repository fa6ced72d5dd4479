import setuptools

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

LICENSE = "BSD License"

setuptools.setup(
    name="tsd-gate",
    version="2026.10.19",
    description="Transition-slow-down Rydberg CNOT gate simulator",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license=LICENSE,
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    package_dir={"": "src"},
    packages=setuptools.find_packages(where="src"),
    include_package_data=True,
    package_data={
        "tsdgate.configs": ["*.json"],
    },
    scripts=[
        "src/tsdgate/scripts/tsd_gate",
    ],
    install_requires=[
        "tqdm",
        "numba",
        "numpy",
        "scipy",
        "natsort",
    ],
    extras_require={
        "tests": ["pytest"],
    },
    python_requires=">=3.9",
)
