"""Compile quantum cellular automata into dual-species Rydberg pulse programs.

Modules
-------
lattice
    Lattice graphs, atom placement and blockade audits.
pxp
    Constrained-basis simulation of blockaded, globally driven arrays.
control
    Mediated-gate pulses and GRAPE for superatom gadgets.
compiler
    QCA models, gate plans, pulse programs and verification.
chaos
    Sampling and exact evaluation of ``g^O(t)``.
"""

__version__ = "0.1.0"
