"""HTTP service wrapping the laboratory; see service.app for the endpoints."""
