# Commands package: one module per area, registered in app.create_app
