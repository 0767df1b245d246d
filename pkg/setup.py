from setuptools import setup, find_packages

setup(
    name="tdlab",
    version="1.0.0",
    description="Policy-evaluation laboratory for projected Bellman error tracking",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    packages=find_packages(include=["tdlab", "tdlab.*"]),
    install_requires=[
        "numpy>=1.26.0,<2.0.0",
        "scipy>=1.11.0,<2.0.0",
        "pandas>=2.1.0,<3.0.0",
        "matplotlib>=3.8.0,<4.0.0",
        "pydantic>=2.5.0,<3.0.0",
        "pydantic-settings>=2.1.0,<3.0.0",
        "structlog>=24.1.0,<25.0.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "tdlab=tdlab.main:main",
        ],
    },
    python_requires=">=3.9",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    keywords="reinforcement-learning temporal-difference mspbe gtd2 policy-evaluation",
)
