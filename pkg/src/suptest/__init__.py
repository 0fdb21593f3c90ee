"""Conformance testing toolkit for supervisory safety controllers.

Pipeline: a synthesised controller behaviour is translated into an
executable guarded-action program and a symbolic FSM test reference;
complete conformance suites (H-Method, W-Method baseline) are derived
from the reference's FSM abstraction, refined to concrete inputs, and
executed against an implementation under test; the tool chain qualifies
itself via an orthogonal suite-completeness checker and mutation analysis.
"""

__version__ = "0.1.0"
