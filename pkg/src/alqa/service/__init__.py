"""Run registry, labeling queue, and defect-forwarding service."""

from alqa.service.store import DefectTicket, LabelTask, Store, forward_defects

__all__ = ["DefectTicket", "LabelTask", "Store", "forward_defects"]
