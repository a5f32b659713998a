from .app import create_app, demo_images, segment_to_payload

__all__ = ["create_app", "demo_images", "segment_to_payload"]
