from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="nlstruct-toolkit",
    version="0.1.0",
    author="",
    author_email="",
    description="Structured prediction with nonlinear top scores over region-decomposed potentials",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22.0",
        "scipy>=1.8.0",
        "pydantic>=2.0.0",
    ],
    entry_points={
        "console_scripts": [
            "nlstruct=nlstruct_toolkit.cli.main:main",
        ],
    },
)
