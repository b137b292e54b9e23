"""Physical constants (CODATA via scipy.constants) and a small species table."""

from dataclasses import dataclass

from scipy import constants as _c

HBAR = _c.hbar
MU0 = _c.mu_0
EPS0 = _c.epsilon_0
C_LIGHT = _c.c
E_CHARGE = _c.e
A0 = _c.physical_constants["Bohr radius"][0]
HARTREE = _c.physical_constants["Hartree energy"][0]
MU_B = _c.physical_constants["Bohr magneton"][0]
ALPHA_S = _c.fine_structure
AMU = _c.physical_constants["atomic mass constant"][0]

# 1 Debye as quoted in the literature estimate: e*a0/2.5
DEBYE_ROUGH = E_CHARGE * A0 / 2.5
DEBYE = 1e-21 / C_LIGHT


@dataclass(frozen=True)
class Species:
    """A fermionic species: mass and dipole moment.

    ``moment`` is a magnetic moment [J/T] when ``electric`` is False and an
    electric dipole moment [C m] otherwise.
    """

    name: str
    mass: float
    moment: float
    electric: bool = False
    c6_au: float | None = None

    def magnetic_equivalent(self):
        """Moment expressed as the magnetic moment with equal 1/r^3 strength.

        mu0 mu^2 / (4 pi) == d^2 / (4 pi eps0)  =>  mu = d * c.
        """
        return self.moment * C_LIGHT if self.electric else self.moment


# C6 for Li-Li in atomic units (Yan, Babb, Dalgarno & Drake 1996)
LI6 = Species("Li6", 6.0151228874 * AMU, MU_B, c6_au=1389.0)
CR53 = Species("Cr53", 52.9406494 * AMU, 6.0 * MU_B)

SPECIES = {s.name: s for s in (LI6, CR53)}


def polar_molecule(mass, dipole=DEBYE_ROUGH, name="polar"):
    return Species(name, mass, dipole, electric=True)
