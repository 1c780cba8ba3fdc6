from .markers import page_markers
from .model import (STIFFNESS_CLASSES, ContactRecord, PageMaterial, PageState, TipMemory,
                    flat_page, node_positions)
from .plane import RigidPlane, plane_contact
from .solver import FingerContact, contact_forces, finger_frame, solve_quasi_static, total_energy

__all__ = [
    "STIFFNESS_CLASSES", "ContactRecord", "FingerContact", "PageMaterial", "PageState", "RigidPlane",
    "TipMemory", "contact_forces", "finger_frame", "flat_page", "node_positions",
    "page_markers", "plane_contact", "solve_quasi_static", "total_energy",
]
