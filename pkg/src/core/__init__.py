"""Core: configuration, persistence and exceptions"""
