from setuptools import setup, find_packages

setup(
    name="dcufront",
    version="0.1.0",
    description="Multi-channel complex U-Net front-end with joint enhancement and recognition training",
    author="Aarush Ghosh",
    author_email="a66ghosh@uwaterloo.ca",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "soundfile>=0.12.0",
        "click>=8.1.0",
        "rich>=13.0.0",
        "tabulate>=0.9.0",
        "cachetools>=5.3.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "black>=23.0.0",
            "ruff>=0.1.0",
            "mypy>=1.7.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "dcufront=dcufront.cli.main:cli",
        ],
    },
)
