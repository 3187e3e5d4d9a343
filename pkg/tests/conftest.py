"""Shared fixtures: catalog systems and assembled operators, built once."""

import math

import pytest

import isoyamabe.discretize as dz
import isoyamabe.system as sy


def product_of_spheres(tau: float) -> sy.IsoparametricSystem:
    """Unit 2-sphere crossed with a 2-sphere scaled so its curvature is 2/tau
    and its area 4*pi*tau."""
    return sy.build_product(sy.build_sphere_linear(2), 2.0 / tau,
                            4.0 * math.pi * tau, 2)


@pytest.fixture(scope="session")
def sphere3():
    return sy.build_sphere_linear(3)


@pytest.fixture(scope="session")
def sphere3_arc(sphere3):
    return sy.to_arclength(sphere3)


@pytest.fixture(scope="session")
def sphere3_op(sphere3_arc):
    return dz.assemble(sphere3_arc, 2000)


@pytest.fixture(scope="session")
def s2xs2():
    return product_of_spheres(1.0)


@pytest.fixture(scope="session")
def s2xs2_arc(s2xs2):
    return sy.to_arclength(s2xs2)


@pytest.fixture(scope="session")
def s2xs2_op(s2xs2_arc):
    return dz.assemble(s2xs2_arc, 2000)


@pytest.fixture(scope="session")
def quad22():
    return sy.build_sphere_quadratic(2, 2)


@pytest.fixture(scope="session")
def quad22_arc(quad22):
    return sy.to_arclength(quad22)


@pytest.fixture(scope="session")
def quad22_op(quad22_arc):
    return dz.assemble(quad22_arc, 2000)
