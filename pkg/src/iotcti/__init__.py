"""Detect IoT-vulnerability chatter in social-media streams with CVE-trained text classifiers."""
__version__ = "0.1.0"
