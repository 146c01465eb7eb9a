from .app import create_app
from .state import CampaignState, Unauthorized, ValidationFailed, shuffle_columns

__all__ = ["CampaignState", "Unauthorized", "ValidationFailed", "create_app", "shuffle_columns"]
