"""Servicios de PeriodicAoI"""
