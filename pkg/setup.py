from setuptools import setup, find_packages
import os
import re

# Read the README file for long description
with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()


# Read version from __init__.py
def get_version():
    init_path = os.path.join(os.path.dirname(__file__), "homogenize", "__init__.py")
    with open(init_path, "r", encoding="utf-8") as f:
        content = f.read()
        version_match = re.search(
            r'^__version__\s*=\s*["\']([^"\']*)["\']', content, re.MULTILINE
        )
        if version_match:
            return version_match.group(1)
        raise RuntimeError("Unable to find version string.")


setup(
    name="homogenize",
    version=get_version(),
    description="Periodic homogenization of semilinear elliptic problems with P1 finite elements",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.12",  # cg(rtol=...)
        "pandas>=1.2.4",
        "tqdm>=4.59.0",
        "click>=8.0",
        "meshio>=5.0",
    ],
    entry_points={
        "console_scripts": [
            "homogenize=homogenize.__main__:main",
        ],
    },
    include_package_data=True,
    license="MIT",
)
