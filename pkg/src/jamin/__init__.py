"""Toolchain for a small assembly-in-the-head language: executable and
leakage-instrumented semantics, static range analysis, a multi-precision
limb library, and differentially-tested crypto case studies."""

__version__ = "0.1.0"
