"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from evifuse.nig import NIGParams

finite = st.floats(-50, 50, allow_nan=False)


@st.composite
def nig_params(draw, delta=(-5.0, 5.0), v=(0.05, 10.0), alpha=(1.05, 10.0), beta=(0.05, 10.0)):
    return NIGParams(draw(st.floats(*delta)), draw(st.floats(*v)),
                     draw(st.floats(*alpha)), draw(st.floats(*beta)))
