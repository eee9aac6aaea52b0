from setuptools import setup, find_packages

setup(
    name="spinphase",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.9",
    install_requires=[
        "pandas",
        "numpy",
        "scipy",
        "scikit-learn",
        "joblib",
        "tqdm",
        "python-dotenv",
    ],
    entry_points={
        "console_scripts": [
            "spinphase=spinphase.cli.main:run",
        ],
    },
)
