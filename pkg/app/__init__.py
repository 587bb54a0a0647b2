"""App package"""
