"""
src/beams/sections.py
=====================
Cross-section constitutive data for Simo-Reissner beams.
"""

from dataclasses import dataclass

import numpy as np

from src.errors import ModelInputError


@dataclass(frozen=True)
class CrossSectionConstitutive:
    E: float
    G: float
    A: float
    A_s: float
    I2: float
    I3: float
    J: float
    R: float

    @classmethod
    def circular(cls, E: float, nu: float, R: float, shear_factor: float = 1.0) -> "CrossSectionConstitutive":
        """Solid circular section; G = E / (2 (1 + nu)), A_s = shear_factor * A."""
        if R <= 0.0:
            raise ModelInputError(f"Section radius must be positive, got {R}")
        if nu <= -1.0 or nu >= 0.5:
            raise ModelInputError(f"Poisson ratio out of range: {nu}")
        area = np.pi * R**2
        inertia = np.pi * R**4 / 4.0
        section = cls(
            E=float(E),
            G=float(E) / (2.0 * (1.0 + nu)),
            A=area,
            A_s=shear_factor * area,
            I2=inertia,
            I3=inertia,
            J=2.0 * inertia,
            R=float(R),
        )
        section.validate()
        return section

    def validate(self):
        for name in ("E", "G", "A", "A_s", "I2", "I3", "J", "R"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ModelInputError(f"Cross-section parameter {name} must be positive, got {value}")

    @property
    def force_stiffness(self) -> np.ndarray:
        """Diagonal of C_Gamma: (EA, GA_s, GA_s)."""
        return np.array([self.E * self.A, self.G * self.A_s, self.G * self.A_s])

    @property
    def moment_stiffness(self) -> np.ndarray:
        """Diagonal of C_kappa: (GJ, EI2, EI3)."""
        return np.array([self.G * self.J, self.E * self.I2, self.E * self.I3])
