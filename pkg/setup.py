from setuptools import setup, find_packages

setup(
    name="pwl-milp",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    py_modules=["pwl_milp"],
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "networkx>=3.0",
        "sympy>=1.12",
        "pandas>=2.0.0",
        "matplotlib>=3.7.0",
        "sqlalchemy>=2.0.0",
        "python-dotenv>=1.0.0",
    ],
    entry_points={
        "console_scripts": [
            "pwl-milp=src.main:main",
            "pwl-milp-jobs=pwl_milp:main",
        ],
    },
    python_requires=">=3.9",
    description="Error-bounded piecewise-linear fitting and small disjunctive MILP formulations",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
)
