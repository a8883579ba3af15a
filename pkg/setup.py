from setuptools import setup, find_packages

setup(
    name="maipp",
    version="0.1.0",
    packages=find_packages(include=["maipp", "maipp.*"]),
    install_requires=[
        "numpy",
        "scipy",
        "networkx",
        "torch",
        "pandas",
        "matplotlib",
        "msgpack",
        "pyyaml",
        "pydantic",
        "rich",
        "typer",
    ],
    entry_points={"console_scripts": ["maipp=maipp.cli.main:app"]},
)
