from .annotate import (Annotation, annotate_source, cast_antipodal,
                       load_annotations, save_annotations)
from .gripper import GripperModel
from .metrics import EvalReport, ObjectEval, evaluate, save_report_csv, save_report_json
from .oracle import GraspVerdict, check_grasp, check_grasps, collision_lattice
from .ranking import grasp_confidence, rank_and_select

__all__ = [
    "GripperModel", "GraspVerdict", "check_grasp", "check_grasps",
    "collision_lattice", "Annotation", "annotate_source", "cast_antipodal",
    "save_annotations", "load_annotations", "grasp_confidence", "rank_and_select",
    "EvalReport", "ObjectEval", "evaluate", "save_report_json", "save_report_csv",
]
